#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "sdisc/errors.hpp"

namespace sdisc {

using Matrix = Eigen::MatrixXd;

// exp(M) by scaling-and-squaring with the diagonal (13,13) Pade approximant.
// Accurate to ~1e-13 relative for well-scaled inputs.
inline Matrix matrix_exponential(const Matrix& M) {
    if (M.rows() != M.cols())
        throw validation_error("matrix_exponential: matrix must be square, got " +
                               std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
    const Eigen::Index n = M.rows();
    if (n == 0) return Matrix(0, 0);
    if (!M.allFinite())
        throw validation_error("matrix_exponential: matrix has non-finite entries");

    // Scale so the 1-norm falls below the Pade-13 accuracy radius.
    const double theta13 = 5.371920351148152;
    const double norm1 = M.cwiseAbs().colwise().sum().maxCoeff();
    if (norm1 == 0.0) return Matrix::Identity(n, n);
    int squarings = 0;
    if (norm1 > theta13)
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    const Matrix A = M / std::ldexp(1.0, squarings);

    static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};

    const Matrix I = Matrix::Identity(n, n);
    const Matrix A2 = A * A;
    const Matrix A4 = A2 * A2;
    const Matrix A6 = A2 * A4;
    const Matrix U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) +
                          b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
    const Matrix V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) +
                     b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;

    Matrix E = (V - U).partialPivLu().solve(V + U);
    for (int k = 0; k < squarings; ++k) E = E * E;
    return E;
}

}  // namespace sdisc
