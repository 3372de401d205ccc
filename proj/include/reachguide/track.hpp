#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace reachguide {

/// Closed polyline centreline with a constant half width. The signed distance
/// to the track edge is half_width - dist(p, centreline): positive on the track.
class Track {
public:
    Track(std::vector<Eigen::Vector2d> centerline, double half_width);

    /// JSON: {"centerline": [[x,y],...], "half_width": w}
    static Track load(const std::string& path);
    void save(const std::string& path) const;

    /// Stadium-shaped loop inside [0,62.5] x [0,50].
    static Track default_oval();

    struct Projection {
        Eigen::Vector2d closest;
        double distance = 0.0;
        double arc_length = 0.0;   // progress along the loop at the closest point
        std::size_t segment = 0;
    };

    Projection project(const Eigen::Vector2d& p) const;
    double signed_distance(const Eigen::Vector2d& p) const;
    /// d(signed_distance)/dp; zero on the centreline itself.
    Eigen::Vector2d signed_distance_gradient(const Eigen::Vector2d& p) const;

    /// Point at arc length s (wrapped onto the loop).
    Eigen::Vector2d point_at(double s) const;
    double heading_at(double s) const;
    double length() const { return cumulative_.back(); }
    double half_width() const { return half_width_; }
    const std::vector<Eigen::Vector2d>& centerline() const { return points_; }

private:
    void build_index();
    std::size_t nearest_segment(const Eigen::Vector2d& p) const;

    std::vector<Eigen::Vector2d> points_;
    std::vector<double> cumulative_;
    double half_width_;

    // uniform bucket grid of candidate segments for nearest-segment queries
    Eigen::Vector2d grid_origin_;
    double cell_ = 2.0;
    int grid_nx_ = 0;
    int grid_ny_ = 0;
    std::vector<std::vector<std::size_t>> cells_;
};

} // namespace reachguide
