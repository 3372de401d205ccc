#include "reachguide/contour.hpp"

#include <cmath>
#include <cstdio>
#include <map>

namespace reachguide {

ValueSlice value_slice(const ValueFunction& value, int axis_x, int axis_y, const StateVec& point, double t, int nx,
                       int ny)
{
    const StateBox box = value.domain();
    const int n = box.dim();
    if (axis_x < 0 || axis_x >= n || axis_y < 0 || axis_y >= n || axis_x == axis_y)
        throw ConfigError("slice: axes must be two distinct state indices below " + std::to_string(n));
    if (nx < 2 || ny < 2) throw ConfigError("slice: need at least 2 samples per axis");
    if (point.size() != n) throw ConfigError("slice: point has the wrong dimension");
    ValueSlice s;
    s.axis_x = axis_x;
    s.axis_y = axis_y;
    s.t = t;
    s.point = point;
    s.xs = Eigen::VectorXd::LinSpaced(nx, box.lo[axis_x], box.hi[axis_x]);
    s.ys = Eigen::VectorXd::LinSpaced(ny, box.lo[axis_y], box.hi[axis_y]);
    Eigen::MatrixXd states(n, static_cast<Eigen::Index>(nx) * ny);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const Eigen::Index c = static_cast<Eigen::Index>(i) * ny + j;
            states.col(c) = point.cwiseMax(box.lo).cwiseMin(box.hi);
            states(axis_x, c) = s.xs[i];
            states(axis_y, c) = s.ys[j];
        }
    Eigen::VectorXd v;
    value.values(states, Eigen::VectorXd::Constant(states.cols(), t), v);
    s.values = Eigen::Map<const Eigen::MatrixXd>(v.data(), ny, nx).transpose();
    return s;
}

std::string slice_csv(const ValueSlice& s)
{
    std::string text = "x" + std::to_string(s.axis_x) + ",x" + std::to_string(s.axis_y) + ",v\n";
    char buf[128];
    for (Eigen::Index i = 0; i < s.xs.size(); ++i)
        for (Eigen::Index j = 0; j < s.ys.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", s.xs[i], s.ys[j], s.values(i, j));
            text += buf;
        }
    return text;
}

namespace {

// Edge ids: each grid edge gets a unique key so touching segments share endpoints exactly.
// Horizontal edge (i,j)-(i+1,j) -> 2*(i*ny+j); vertical (i,j)-(i,j+1) -> 2*(i*ny+j)+1.
struct EdgeKey {
    long long id;
    bool operator<(const EdgeKey& o) const { return id < o.id; }
    bool operator==(const EdgeKey& o) const { return id == o.id; }
};

} // namespace

std::vector<Polyline> contour_lines(const ValueSlice& s, double level)
{
    std::vector<Polyline> lines;
    if (!std::isfinite(level)) return lines;
    const Eigen::Index nx = s.values.rows(), ny = s.values.cols();
    const auto hkey = [&](Eigen::Index i, Eigen::Index j) { return EdgeKey{2 * (i * ny + j)}; };
    const auto vkey = [&](Eigen::Index i, Eigen::Index j) { return EdgeKey{2 * (i * ny + j) + 1}; };
    std::map<EdgeKey, Eigen::Vector2d> where;
    const auto cross = [&](EdgeKey k, Eigen::Index i0, Eigen::Index j0, Eigen::Index i1, Eigen::Index j1) {
        if (!where.count(k)) {
            const double a = s.values(i0, j0) - level, b = s.values(i1, j1) - level;
            const double f = a / (a - b);
            where[k] = {s.xs[i0] + f * (s.xs[i1] - s.xs[i0]), s.ys[j0] + f * (s.ys[j1] - s.ys[j0])};
        }
        return k;
    };

    std::vector<std::pair<EdgeKey, EdgeKey>> segs;
    for (Eigen::Index i = 0; i + 1 < nx; ++i)
        for (Eigen::Index j = 0; j + 1 < ny; ++j) {
            // corners counter-clockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1)
            const double c0 = s.values(i, j), c1 = s.values(i + 1, j), c2 = s.values(i + 1, j + 1),
                         c3 = s.values(i, j + 1);
            const int code = (c0 > level) | (c1 > level) << 1 | (c2 > level) << 2 | (c3 > level) << 3;
            if (code == 0 || code == 15) continue;
            const auto bottom = [&] { return cross(hkey(i, j), i, j, i + 1, j); };
            const auto right = [&] { return cross(vkey(i + 1, j), i + 1, j, i + 1, j + 1); };
            const auto top = [&] { return cross(hkey(i, j + 1), i, j + 1, i + 1, j + 1); };
            const auto left = [&] { return cross(vkey(i, j), i, j, i, j + 1); };
            const bool centre_above = 0.25 * (c0 + c1 + c2 + c3) > level;
            switch (code) {
            case 1: case 14: segs.push_back({left(), bottom()}); break;
            case 2: case 13: segs.push_back({bottom(), right()}); break;
            case 3: case 12: segs.push_back({left(), right()}); break;
            case 4: case 11: segs.push_back({right(), top()}); break;
            case 6: case 9: segs.push_back({bottom(), top()}); break;
            case 7: case 8: segs.push_back({left(), top()}); break;
            case 5:
                if (centre_above) {
                    segs.push_back({left(), top()});
                    segs.push_back({bottom(), right()});
                } else {
                    segs.push_back({left(), bottom()});
                    segs.push_back({right(), top()});
                }
                break;
            case 10:
                if (centre_above) {
                    segs.push_back({left(), bottom()});
                    segs.push_back({right(), top()});
                } else {
                    segs.push_back({left(), top()});
                    segs.push_back({bottom(), right()});
                }
                break;
            default: break;
            }
        }

    // Every interior crossing touches exactly two segments; join by walking.
    std::map<EdgeKey, std::vector<std::size_t>> touching;
    for (std::size_t k = 0; k < segs.size(); ++k) {
        touching[segs[k].first].push_back(k);
        touching[segs[k].second].push_back(k);
    }
    std::vector<char> used(segs.size(), 0);
    const auto walk = [&](std::size_t start, EdgeKey from) {
        std::vector<EdgeKey> keys{from};
        std::size_t seg = start;
        EdgeKey at = from;
        while (true) {
            used[seg] = 1;
            at = segs[seg].first == at ? segs[seg].second : segs[seg].first;
            keys.push_back(at);
            std::size_t next = segs.size();
            for (std::size_t c : touching[at])
                if (!used[c]) next = c;
            if (next == segs.size()) break;
            seg = next;
        }
        return keys;
    };
    const auto emit = [&](const std::vector<EdgeKey>& keys) {
        Polyline p;
        for (const EdgeKey& k : keys) p.push_back(where.at(k));
        lines.push_back(std::move(p));
    };
    // open lines start at boundary crossings (touched once)
    for (std::size_t k = 0; k < segs.size(); ++k) {
        if (used[k]) continue;
        for (EdgeKey end : {segs[k].first, segs[k].second})
            if (touching[end].size() == 1 && !used[k]) emit(walk(k, end));
    }
    for (std::size_t k = 0; k < segs.size(); ++k)
        if (!used[k]) emit(walk(k, segs[k].first));
    return lines;
}

std::string contours_csv(const std::vector<std::pair<double, std::vector<Polyline>>>& levels)
{
    std::string text = "level,line,x,y\n";
    char buf[128];
    for (const auto& [level, lines] : levels)
        for (std::size_t l = 0; l < lines.size(); ++l)
            for (const auto& p : lines[l]) {
                std::snprintf(buf, sizeof buf, "%.10g,%zu,%.10g,%.10g\n", level, l, p.x(), p.y());
                text += buf;
            }
    return text;
}

} // namespace reachguide
