#include "funglm/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace funglm {

Grid make_grid(int T) {
    if (T < 1) throw std::invalid_argument("grid: T must be >= 1");
    return Grid{T};
}

GridFunction make_grid_function(const Grid& grid, Eigen::VectorXd values) {
    if (values.size() != grid.size)
        throw std::invalid_argument("grid function: value count does not match grid size");
    if (!values.allFinite())
        throw std::invalid_argument("grid function: non-finite values");
    return {grid, std::move(values)};
}

GridFunction zero_function(const Grid& grid) {
    return {grid, Eigen::VectorXd::Zero(grid.size)};
}

GridFunction constant_function(const Grid& grid, double c) {
    return {grid, Eigen::VectorXd::Constant(grid.size, c)};
}

double inner(const GridFunction& f, const GridFunction& g) {
    if (f.grid != g.grid) throw std::invalid_argument("inner: grid mismatch");
    return f.values.dot(g.values) / f.grid.size;
}

double norm2(const GridFunction& f) { return inner(f, f); }

double norm(const GridFunction& f) { return std::sqrt(norm2(f)); }

BasisSet cosine_basis(int T, int J) {
    if (J < 1) throw std::invalid_argument("cosine_basis: J must be >= 1");
    if (J > T)
        throw std::invalid_argument("cosine_basis: J > T would be rank deficient on a T-point grid");
    Grid grid = make_grid(T);
    Eigen::MatrixXd fns(T, J);
    const double sqrt2 = std::sqrt(2.0);
    for (int g = 0; g < T; ++g) {
        const double t = grid.node(g);
        fns(g, 0) = 1.0;
        for (int j = 1; j < J; ++j) fns(g, j) = sqrt2 * std::cos(j * M_PI * t);
    }
    return {grid, std::move(fns)};
}

}  // namespace funglm
