#ifndef UAVNOMA_GEOMETRY_HPP_
#define UAVNOMA_GEOMETRY_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnoma/config.hpp"
#include "uavnoma/rng.hpp"

namespace uavnoma {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct Rect {
  double width = 0.0;
  double height = 0.0;
};

// Ground IoT devices, i.u.d. over the deployment rectangle.
struct DeviceSet {
  std::vector<Point2> positions;
  int count() const { return static_cast<int>(positions.size()); }
};

// Planar (x,y) coordinates of the UAVs; altitude is controlled per slot.
struct UavPlacement {
  std::vector<Point2> planar;
  int count() const { return static_cast<int>(planar.size()); }
};

// Device -> closest-UAV ownership for one slot.
struct Association {
  std::vector<int> owner;                 // per device
  std::vector<std::vector<int>> members;  // per UAV
};

inline DeviceSet deploy_devices(int n, Rect area, Rng& rng) {
  if (n < 1) throw ConfigError("deploy_devices: n must be >= 1");
  if (area.width <= 0.0 || area.height <= 0.0)
    throw ConfigError("deploy_devices: degenerate area");
  DeviceSet d;
  d.positions.reserve(n);
  for (int i = 0; i < n; ++i)
    d.positions.push_back({rng.uniform(0.0, area.width),
                           rng.uniform(0.0, area.height)});
  return d;
}

inline double distance_3d(Point2 device, Point3 uav) {
  const double dx = uav.x - device.x;
  const double dy = uav.y - device.y;
  return std::sqrt(dx * dx + dy * dy + uav.z * uav.z);
}

namespace detail {

inline double within_cluster_variance(const DeviceSet& devices,
                                      const std::vector<Point2>& centroids,
                                      const std::vector<int>& label) {
  double v = 0.0;
  for (size_t i = 0; i < devices.positions.size(); ++i) {
    const Point2& p = devices.positions[i];
    const Point2& c = centroids[label[i]];
    const double dx = p.x - c.x, dy = p.y - c.y;
    v += dx * dx + dy * dy;
  }
  return v;
}

}  // namespace detail

// Lloyd's algorithm on the device ground positions. Initial centroids are m
// distinct devices picked at random; an emptied cluster is re-seeded at a
// random device so M stays fixed.
inline UavPlacement kmeans_xy(const DeviceSet& devices, int m, Rng& rng,
                              int max_iters = 100, double tol = 1e-3) {
  const int n = devices.count();
  if (m < 1 || m > n) throw ConfigError("kmeans_xy: need 1 <= m <= N");

  std::vector<Point2> centroids;
  {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int k = 0; k < m; ++k) {
      const size_t j = k + rng.index(pool.size() - k);
      std::swap(pool[k], pool[j]);
      centroids.push_back(devices.positions[pool[k]]);
    }
  }

  std::vector<int> label(n, 0);
  double prev_var = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_k = 0;
      for (int k = 0; k < m; ++k) {
        const double dx = devices.positions[i].x - centroids[k].x;
        const double dy = devices.positions[i].y - centroids[k].y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best) { best = d2; best_k = k; }
      }
      label[i] = best_k;
    }
    const double var = detail::within_cluster_variance(devices, centroids, label);
    // Lloyd guarantee: assignment step never increases the objective.
    if (var > prev_var * (1.0 + 1e-12))
      throw std::logic_error("kmeans_xy: within-cluster variance increased");
    prev_var = var;

    std::vector<Point2> next(m, Point2{0.0, 0.0});
    std::vector<int> size(m, 0);
    for (int i = 0; i < n; ++i) {
      next[label[i]].x += devices.positions[i].x;
      next[label[i]].y += devices.positions[i].y;
      ++size[label[i]];
    }
    double shift = 0.0;
    for (int k = 0; k < m; ++k) {
      if (size[k] == 0) {
        next[k] = devices.positions[rng.index(n)];
      } else {
        next[k].x /= size[k];
        next[k].y /= size[k];
      }
      shift = std::max(shift, std::hypot(next[k].x - centroids[k].x,
                                         next[k].y - centroids[k].y));
    }
    centroids = std::move(next);
    if (shift < tol) break;
  }
  return UavPlacement{std::move(centroids)};
}

// Closest-UAV association by 3D distance; ties go to the lowest UAV index.
inline Association associate(const DeviceSet& devices,
                             const std::vector<Point3>& uavs) {
  if (uavs.empty()) throw ConfigError("associate: need at least one UAV");
  Association a;
  a.owner.resize(devices.positions.size());
  a.members.resize(uavs.size());
  for (size_t i = 0; i < devices.positions.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_m = 0;
    for (size_t m = 0; m < uavs.size(); ++m) {
      const double d = distance_3d(devices.positions[i], uavs[m]);
      if (d < best) { best = d; best_m = static_cast<int>(m); }
    }
    a.owner[i] = best_m;
    a.members[best_m].push_back(static_cast<int>(i));
  }
  return a;
}

inline void save_devices_csv(const DeviceSet& devices, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "device_id,x,y\n";
  out.precision(17);
  for (int i = 0; i < devices.count(); ++i)
    out << i << "," << devices.positions[i].x << ","
        << devices.positions[i].y << "\n";
}

inline DeviceSet load_devices_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  DeviceSet d;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id, x, y;
    if (!std::getline(row, id, ',') || !std::getline(row, x, ',') ||
        !std::getline(row, y, ','))
      throw ConfigError("malformed device CSV row: " + line);
    d.positions.push_back({std::stod(x), std::stod(y)});
  }
  if (d.positions.empty()) throw ConfigError("device CSV is empty: " + path);
  return d;
}

}  // namespace uavnoma

#endif  // UAVNOMA_GEOMETRY_HPP_
