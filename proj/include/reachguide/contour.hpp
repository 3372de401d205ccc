#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reachguide/value_function.hpp"

namespace reachguide {

/// V on a regular 2D grid over two state axes, all other components held at `point`.
/// values(i, j) is V at (xs[i], ys[j]).
struct ValueSlice {
    int axis_x = 0;
    int axis_y = 1;
    double t = 0.0;
    StateVec point;
    Eigen::VectorXd xs;
    Eigen::VectorXd ys;
    Eigen::MatrixXd values;
};

/// Samples the slice over the value's domain along the two axes.
ValueSlice value_slice(const ValueFunction& value, int axis_x, int axis_y, const StateVec& point, double t, int nx,
                       int ny);

/// Rows "x,y,v" with axis names in the header.
std::string slice_csv(const ValueSlice& slice);

using Polyline = std::vector<Eigen::Vector2d>;

/// Marching squares at `level`. Segments are joined into polylines; closed
/// loops repeat their first point at the end. A non-finite level gives none.
std::vector<Polyline> contour_lines(const ValueSlice& slice, double level);

/// Rows "level,line,x,y".
std::string contours_csv(const std::vector<std::pair<double, std::vector<Polyline>>>& levels);

} // namespace reachguide
