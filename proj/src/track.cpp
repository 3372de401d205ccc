#include "reachguide/track.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "reachguide/common.hpp"

namespace reachguide {

namespace {

struct SegmentHit {
    double distance;
    double along;   // fraction in [0,1]
};

SegmentHit point_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return {(p - (a + s * ab)).norm(), s};
}

} // namespace

Track::Track(std::vector<Eigen::Vector2d> centerline, double half_width)
    : points_(std::move(centerline)), half_width_(half_width)
{
    if (points_.size() < 3) throw ConfigError("track centerline needs at least 3 points");
    if (!(half_width_ > 0.0)) throw ConfigError("track half_width must be positive");
    // drop an explicit closing point duplicating the first one
    if ((points_.front() - points_.back()).norm() < 1e-12) points_.pop_back();
    cumulative_.assign(points_.size() + 1, 0.0);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& a = points_[i];
        const auto& b = points_[(i + 1) % points_.size()];
        cumulative_[i + 1] = cumulative_[i] + (b - a).norm();
    }
    build_index();
}

Track Track::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open track file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed track file " + path + ": " + e.what());
    }
    if (!j.contains("centerline") || !j.contains("half_width"))
        throw ConfigError("track file must define centerline and half_width: " + path);
    std::vector<Eigen::Vector2d> pts;
    for (const auto& p : j.at("centerline")) {
        if (!p.is_array() || p.size() != 2) throw ConfigError("track points must be [x, y] pairs");
        pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return Track(std::move(pts), j.at("half_width").get<double>());
}

void Track::save(const std::string& path) const
{
    nlohmann::json j;
    j["half_width"] = half_width_;
    auto& pts = j["centerline"] = nlohmann::json::array();
    for (const auto& p : points_) pts.push_back({p.x(), p.y()});
    std::ofstream out(path);
    if (!out) throw IoError("cannot write track file: " + path);
    out << j.dump(1) << '\n';
}

Track Track::default_oval()
{
    const Eigen::Vector2d center(31.25, 25.0);
    const double radius = 17.0;
    const double half_straight = 12.0;
    std::vector<Eigen::Vector2d> pts;
    const int straight_steps = 24;
    const int arc_steps = 36;
    // bottom straight, left to right
    for (int i = 0; i < straight_steps; ++i) {
        const double x = center.x() - half_straight + 2.0 * half_straight * i / straight_steps;
        pts.emplace_back(x, center.y() - radius);
    }
    // right arc, -90 deg -> +90 deg
    for (int i = 0; i < arc_steps; ++i) {
        const double a = -M_PI / 2 + M_PI * i / arc_steps;
        pts.emplace_back(center.x() + half_straight + radius * std::cos(a), center.y() + radius * std::sin(a));
    }
    // top straight, right to left
    for (int i = 0; i < straight_steps; ++i) {
        const double x = center.x() + half_straight - 2.0 * half_straight * i / straight_steps;
        pts.emplace_back(x, center.y() + radius);
    }
    // left arc, +90 deg -> +270 deg
    for (int i = 0; i < arc_steps; ++i) {
        const double a = M_PI / 2 + M_PI * i / arc_steps;
        pts.emplace_back(center.x() - half_straight + radius * std::cos(a), center.y() + radius * std::sin(a));
    }
    return Track(std::move(pts), 2.0);
}

void Track::build_index()
{
    Eigen::Vector2d lo = points_.front();
    Eigen::Vector2d hi = points_.front();
    for (const auto& p : points_) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double margin = 4.0 * half_width_ + 10.0;
    grid_origin_ = lo.array() - margin;
    const Eigen::Vector2d extent = (hi - lo).array() + 2.0 * margin;
    grid_nx_ = static_cast<int>(std::ceil(extent.x() / cell_));
    grid_ny_ = static_cast<int>(std::ceil(extent.y() / cell_));
    cells_.assign(static_cast<std::size_t>(grid_nx_) * grid_ny_, {});
    const double half_diag = cell_ * std::sqrt(0.5);
    const std::size_t n = points_.size();
    std::vector<double> d(n);
    for (int iy = 0; iy < grid_ny_; ++iy) {
        for (int ix = 0; ix < grid_nx_; ++ix) {
            const Eigen::Vector2d c = grid_origin_ + Eigen::Vector2d((ix + 0.5) * cell_, (iy + 0.5) * cell_);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < n; ++s) {
                d[s] = point_segment(c, points_[s], points_[(s + 1) % n]).distance;
                best = std::min(best, d[s]);
            }
            const double upper = best + half_diag;
            auto& cell = cells_[static_cast<std::size_t>(iy) * grid_nx_ + ix];
            for (std::size_t s = 0; s < n; ++s)
                if (d[s] - half_diag <= upper) cell.push_back(s);
        }
    }
}

std::size_t Track::nearest_segment(const Eigen::Vector2d& p) const
{
    const std::size_t n = points_.size();
    const Eigen::Vector2d rel = (p - grid_origin_) / cell_;
    const int ix = static_cast<int>(std::floor(rel.x()));
    const int iy = static_cast<int>(std::floor(rel.y()));
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_s = 0;
    auto consider = [&](std::size_t s) {
        const double dist = point_segment(p, points_[s], points_[(s + 1) % n]).distance;
        if (dist < best) {
            best = dist;
            best_s = s;
        }
    };
    if (ix >= 0 && iy >= 0 && ix < grid_nx_ && iy < grid_ny_) {
        for (std::size_t s : cells_[static_cast<std::size_t>(iy) * grid_nx_ + ix]) consider(s);
    } else {
        for (std::size_t s = 0; s < n; ++s) consider(s);
    }
    return best_s;
}

Track::Projection Track::project(const Eigen::Vector2d& p) const
{
    const std::size_t n = points_.size();
    const std::size_t s = nearest_segment(p);
    const auto& a = points_[s];
    const auto& b = points_[(s + 1) % n];
    const SegmentHit hit = point_segment(p, a, b);
    Projection out;
    out.segment = s;
    out.closest = a + hit.along * (b - a);
    out.distance = hit.distance;
    out.arc_length = cumulative_[s] + hit.along * (cumulative_[s + 1] - cumulative_[s]);
    return out;
}

double Track::signed_distance(const Eigen::Vector2d& p) const
{
    return half_width_ - project(p).distance;
}

Eigen::Vector2d Track::signed_distance_gradient(const Eigen::Vector2d& p) const
{
    const Projection pr = project(p);
    if (pr.distance <= 0.0) return Eigen::Vector2d::Zero();
    return -(p - pr.closest) / pr.distance;
}

Eigen::Vector2d Track::point_at(double s) const
{
    const double total = length();
    s = std::fmod(s, total);
    if (s < 0) s += total;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t seg = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - cumulative_.begin()) - 1));
    seg = std::min(seg, points_.size() - 1);
    const double seg_len = cumulative_[seg + 1] - cumulative_[seg];
    const double frac = seg_len > 0 ? (s - cumulative_[seg]) / seg_len : 0.0;
    const auto& a = points_[seg];
    const auto& b = points_[(seg + 1) % points_.size()];
    return a + frac * (b - a);
}

double Track::heading_at(double s) const
{
    const Eigen::Vector2d d = point_at(s + 0.5) - point_at(s - 0.5);
    return std::atan2(d.y(), d.x());
}

} // namespace reachguide
