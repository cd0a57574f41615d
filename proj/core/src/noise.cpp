#include "kpzlab/noise.hpp"

#include <cmath>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "kpzlab/errors.hpp"
#include "kpzlab/parallel.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

NoiseIncrementSlice sample_increment_slice(const TorusGrid& grid, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw ConfigError("noise slice needs dt > 0");
  NoiseIncrementSlice s{grid, dt, Field(grid.size())};
  const double sd = std::sqrt(dt) * grid.spacing();
  for (double& v : s.raw) v = sd * rng.normal();
  return s;
}

NoiseIncrementSlice sample_increment_slice(const TorusGrid& grid, double dt,
                                           const SeedStream& stream) {
  Rng rng(stream);
  return sample_increment_slice(grid, dt, rng);
}

MollificationOperator::MollificationOperator(const TorusGrid& grid, const Mollifier& m,
                                             double eps)
    : grid_(grid), mollifier_(m), eps_(eps) {
  const double h = grid.spacing();
  if (!(eps > 0.0)) throw ConfigError("mollification scale must be positive");
  if (m.kind() == Mollifier::Kind::SmoothBump) {
    if (h > 0.25 * eps * (1.0 + 1e-12)) {
      throw ConfigError("grid too coarse for eps: need spacing <= eps/4");
    }
  } else if (eps * m.box_width() < h * (1.0 - 1e-12)) {
    throw ConfigError("grid box narrower than one cell");
  }
  if (eps >= 0.5 * grid.side()) throw ConfigError("mollifier support exceeds the torus");

  const int n = grid.n();
  stencil_.assign(grid.size(), 0.0);
  const double scale = 1.0 / (eps * eps);
  double mass = 0.0;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const Vec2 z{grid.signed_offset(ix) * h / eps, grid.signed_offset(iy) * h / eps};
      const double w = scale * m(z) * h * h;
      stencil_[grid.index(ix, iy)] = w;
      mass += w;
    }
  }
  if (!(mass > 0.0)) throw ConfigError("mollifier stencil is empty on this grid");
  raw_mass_ = mass;
  double sq = 0.0;
  for (double& w : stencil_) {
    w /= mass;
    sq += w * w;
  }
  variance_rate_ = sq / (h * h);

  auto& ws = thread_workspace(n);
  Spectrum spec;
  ws.forward(stencil_, spec);
  multiplier_.resize(spec.size());
  Spectrum power(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) {
    multiplier_[k] = spec[k] / (h * h);
    power[k] = std::norm(spec[k]) / (h * h);
  }
  covariance_.resize(grid.size());
  ws.inverse(power, covariance_);
  covariance_[0] = variance_rate_;
}

double MollificationOperator::covariance_rate_cells(int dx, int dy) const {
  if (dx == 0 && dy == 0) return variance_rate_;
  return covariance_[grid_.index(dx, dy)];
}

double MollificationOperator::covariance_rate(Vec2 lag) const {
  return interpolate_periodic(grid_, covariance_, lag);
}

void MollificationOperator::apply(std::span<const double> raw, std::span<double> out) const {
  if (raw.size() != grid_.size() || out.size() != grid_.size()) {
    throw ConfigError("slice does not match the mollification grid");
  }
  if (out.data() != raw.data()) std::memcpy(out.data(), raw.data(), raw.size() * sizeof(double));
  thread_workspace(grid_.n()).apply(out, std::span<const std::complex<double>>(multiplier_));
}

MollifiedSlice MollificationOperator::operator()(const NoiseIncrementSlice& slice) const {
  if (!(slice.grid == grid_)) throw ConfigError("slice grid does not match the operator");
  MollifiedSlice out{grid_, eps_, slice.dt, Field(grid_.size()), slice.dt * variance_rate_};
  apply(slice.raw, out.values);
  return out;
}

MollifiedSlice mollify_slice(const NoiseIncrementSlice& slice, const Mollifier& m, double eps) {
  return MollificationOperator(slice.grid, m, eps)(slice);
}

bool CovarianceSelfTest::any_flagged() const {
  if (temporal.flagged) return true;
  for (const auto& r : spatial) {
    if (r.flagged) return true;
  }
  return false;
}

CovarianceSelfTest covariance_selftest(const TorusGrid& grid, const Mollifier& m, double eps,
                                       double dt, std::size_t replicas, std::uint64_t base_seed,
                                       int threads) {
  if (replicas < 2) throw ConfigError("covariance self-test needs at least two replicas");
  const MollificationOperator op(grid, m, eps);
  const CovarianceKernel kernel =
      m.kind() == Mollifier::Kind::SmoothBump ? default_covariance() : CovarianceKernel(m);
  const double h = grid.spacing();
  const std::vector<double> lags{0.0, 0.25 * eps, 0.5 * eps, eps, 2.0 * eps};
  std::vector<int> cells;
  for (double l : lags) cells.push_back(static_cast<int>(std::lround(l / h)));
  const int n = grid.n();
  const std::size_t k = cells.size();

  // Per replica: k spatial lag products followed by the temporal product.
  const SeedStream base{base_seed, 0};
  auto rows = map_replicas<std::vector<double>>(replicas, threads, [&](std::size_t r) {
    Rng rng(base.with_replica(r));
    const auto a = op(sample_increment_slice(grid, dt, rng));
    const auto b = op(sample_increment_slice(grid, dt, rng));
    std::vector<double> out(k + 1, 0.0);
    for (std::size_t q = 0; q < k; ++q) {
      double acc = 0.0;
      for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
          const double v = a.values[grid.index(ix, iy)];
          acc += v * (a.values[grid.index(ix + cells[q], iy)] +
                      a.values[grid.index(ix, iy + cells[q])]);
        }
      }
      out[q] = acc / (2.0 * static_cast<double>(grid.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) acc += a.values[i] * b.values[i];
    out[k] = acc / static_cast<double>(grid.size());
    return out;
  });

  auto column = [&](std::size_t q) {
    std::vector<double> xs(replicas);
    for (std::size_t r = 0; r < replicas; ++r) xs[r] = rows[r][q];
    return xs;
  };
  auto finish = [](CovarianceRow& row, const std::vector<double>& xs) {
    row.empirical = mean(xs);
    row.std_error = standard_error(xs);
    row.flagged = std::abs(row.empirical - row.theoretical) >
                  0.05 * std::abs(row.theoretical) + 4.0 * row.std_error;
    row.flagged_discrete = std::abs(row.empirical - row.discrete) > 4.0 * row.std_error;
  };

  CovarianceSelfTest out;
  for (std::size_t q = 0; q < k; ++q) {
    CovarianceRow row;
    row.lag = lags[q];
    row.lag_cells = cells[q];
    row.theoretical = dt / (eps * eps) * kernel(Vec2{cells[q] * h / eps, 0.0});
    row.discrete = dt * 0.5 *
                   (op.covariance_rate_cells(cells[q], 0) + op.covariance_rate_cells(0, cells[q]));
    finish(row, column(q));
    out.spatial.push_back(row);
  }
  out.temporal.lag = 0.0;
  finish(out.temporal, column(k));
  return out;
}

namespace {

constexpr char kMagic[4] = {'K', 'P', 'Z', 'G'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ConfigError("truncated grid file");
  return v;
}

void check_size(const GridHeader& h, std::size_t count) {
  if (h.n <= 0 || static_cast<std::size_t>(h.n) * h.n != count) {
    throw ConfigError("grid header does not match the number of values");
  }
}

}  // namespace

void write_grid_csv(std::ostream& os, const GridHeader& h, std::span<const double> values) {
  check_size(h, values.size());
  os << std::setprecision(17);
  os << "# n=" << h.n << ",L=" << h.side << ",dt=" << h.dt << ",eps=" << h.eps
     << ",seed=" << h.seed << '\n';
  for (int iy = 0; iy < h.n; ++iy) {
    for (int ix = 0; ix < h.n; ++ix) {
      if (ix) os << ',';
      os << values[static_cast<std::size_t>(iy) * h.n + ix];
    }
    os << '\n';
  }
}

void write_grid_binary(std::ostream& os, const GridHeader& h, std::span<const double> values) {
  check_size(h, values.size());
  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, static_cast<std::uint32_t>(h.n));
  put(os, h.side);
  put(os, h.dt);
  put(os, h.eps);
  put(os, h.seed);
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::vector<double> read_grid_binary(std::istream& is, GridHeader& h) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ConfigError("not a grid file");
  }
  if (get<std::uint32_t>(is) != kVersion) throw ConfigError("unsupported grid file version");
  h.n = static_cast<int>(get<std::uint32_t>(is));
  h.side = get<double>(is);
  h.dt = get<double>(is);
  h.eps = get<double>(is);
  h.seed = get<std::uint64_t>(is);
  std::vector<double> values(static_cast<std::size_t>(h.n) * h.n);
  if (!is.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(values.size() * sizeof(double)))) {
    throw ConfigError("truncated grid file");
  }
  return values;
}

std::vector<double> read_grid_csv(std::istream& is, GridHeader& h) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw ConfigError("missing grid header");
  std::istringstream hs(line.substr(2));
  std::string field;
  while (std::getline(hs, field, ',')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed grid header");
    const std::string key = field.substr(0, eq);
    const std::string val = field.substr(eq + 1);
    if (key == "n") h.n = std::stoi(val);
    else if (key == "L") h.side = std::stod(val);
    else if (key == "dt") h.dt = std::stod(val);
    else if (key == "eps") h.eps = std::stod(val);
    else if (key == "seed") h.seed = std::stoull(val);
  }
  std::vector<double> values;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) values.push_back(std::stod(field));
  }
  check_size(h, values.size());
  return values;
}

}  // namespace kpzlab
