#pragma once

#include <Eigen/Dense>

namespace funglm {

/// Uniform midpoint grid on [0,1]: nodes t_g = (g - 1/2)/T, weight 1/T each.
/// The discrete inner product (1/T) Σ f(t_g) g(t_g) makes the cosine system
/// below exactly orthonormal, so quadrature error never enters bound checks.
struct Grid {
    int size = 0;

    double node(int g) const { return (g + 0.5) / size; }  // g = 0..size-1
    double weight() const { return 1.0 / size; }

    friend bool operator==(const Grid& a, const Grid& b) { return a.size == b.size; }
    friend bool operator!=(const Grid& a, const Grid& b) { return a.size != b.size; }
};

Grid make_grid(int T);

/// A function on [0,1] represented by its values at the grid nodes.
struct GridFunction {
    Grid grid;
    Eigen::VectorXd values;
};

GridFunction make_grid_function(const Grid& grid, Eigen::VectorXd values);
GridFunction zero_function(const Grid& grid);
GridFunction constant_function(const Grid& grid, double c);

/// Discrete L2 inner product (1/T) Σ_g f(t_g) g(t_g). Grids must match.
double inner(const GridFunction& f, const GridFunction& g);
double norm2(const GridFunction& f);
double norm(const GridFunction& f);

/// Ordered collection of grid functions, column j = φ_{j+1}.
struct BasisSet {
    Grid grid;
    Eigen::MatrixXd functions;  // T x J

    int count() const { return static_cast<int>(functions.cols()); }
    GridFunction function(int j) const { return {grid, functions.col(j)}; }
};

/// φ_1 ≡ 1, φ_{j+1}(t) = √2 cos(jπt). Exactly discrete-orthonormal on the
/// midpoint grid for all J ≤ T. Throws if J > T (frequency T is identically
/// zero at the midpoints, so higher indices are rank deficient).
BasisSet cosine_basis(int T, int J);

}  // namespace funglm
