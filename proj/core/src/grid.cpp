#include "nsk/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include "json.hpp"
#include "nsk/constitutive.hpp"

namespace nsk {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

struct Grid::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

Grid::Grid(int n, double length) : n_(n), length_(length) {
  if (!is_pow2(n) || n < 16)
    throw std::invalid_argument("Grid: n must be a power of two >= 16");
  if (!(length > 0.0)) throw std::invalid_argument("Grid: length must be positive");
  cutoff_ = n_ / 3;
  kappa_.resize(n_ / 2 + 1);
  for (int l = 0; l <= n_ / 2; ++l) kappa_[l] = 2.0 * kPi * l / length_;

  plans_ = std::make_unique<Plans>();
  std::vector<double> real_buf(n_);
  std::vector<std::complex<double>> cplx_buf(n_ / 2 + 1);
  std::lock_guard<std::mutex> lock(planner_mutex());
  // Unaligned + estimate: deterministic plan choice, arbitrary buffers legal
  // in the new-array execute calls.
  plans_->r2c = fftw_plan_dft_r2c_1d(
      n_, real_buf.data(), reinterpret_cast<fftw_complex*>(cplx_buf.data()),
      FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->c2r = fftw_plan_dft_c2r_1d(
      n_, reinterpret_cast<fftw_complex*>(cplx_buf.data()), real_buf.data(),
      FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plans_->r2c || !plans_->c2r) throw std::runtime_error("Grid: FFT planning failed");
}

Grid::~Grid() = default;

std::shared_ptr<const Grid> Grid::create(int n, double length) {
  return std::shared_ptr<const Grid>(new Grid(n, length));
}

Field Grid::make_field(double fill) const {
  Field f;
  f.grid = shared_from_this();
  f.v.assign(n_, fill);
  return f;
}

Field Grid::sample(double (*fn)(double)) const { return sample_fn(fn); }

void Grid::fwd(const double* in, std::complex<double>* out) const {
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
  const double scale = 1.0 / n_;
  for (int l = 0; l <= n_ / 2; ++l) out[l] *= scale;
}

void Grid::inv_destroy(std::complex<double>* in, double* out) const {
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(in), out);
}

void Grid::apply_deriv(std::complex<double>* spec, int order) const {
  if (order < 1) throw std::invalid_argument("apply_deriv: order >= 1");
  const int nh = n_ / 2;
  for (int l = 0; l <= nh; ++l) {
    std::complex<double> ik(0.0, kappa_[l]);
    std::complex<double> mult = ik;
    for (int p = 1; p < order; ++p) mult *= ik;
    spec[l] *= mult;
  }
  if (order % 2 == 1) spec[nh] = 0.0;  // Nyquist has no well-defined sign
}

void Grid::apply_dealias(std::complex<double>* spec) const {
  for (int l = cutoff_ + 1; l <= n_ / 2; ++l) spec[l] = 0.0;
}

void Grid::deriv_into(const double* in, double* out, int order, bool dealias) const {
  std::vector<std::complex<double>> spec(n_ / 2 + 1);
  fwd(in, spec.data());
  if (dealias) apply_dealias(spec.data());
  apply_deriv(spec.data(), order);
  inv_destroy(spec.data(), out);
}

void Grid::dealias_into(const double* in, double* out) const {
  std::vector<std::complex<double>> spec(n_ / 2 + 1);
  fwd(in, spec.data());
  apply_dealias(spec.data());
  inv_destroy(spec.data(), out);
}

Field Grid::deriv(const Field& f, int order) const {
  Field out = make_field();
  deriv_into(f.v.data(), out.v.data(), order, false);
  return out;
}

Field Grid::dealias(const Field& f) const {
  Field out = make_field();
  dealias_into(f.v.data(), out.v.data());
  return out;
}

double Grid::integrate(const Field& f) const {
  // Neumaier compensation: unlike plain Kahan it survives summands larger
  // than the running sum, so cancellation-heavy integrands stay exact.
  double sum = 0.0, comp = 0.0;
  for (double x : f.v) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return (sum + comp) * (length_ / n_);
}

double Grid::spectral_tail_ratio(const Field& f) const {
  std::vector<std::complex<double>> spec(n_ / 2 + 1);
  fwd(f.v.data(), spec.data());
  double peak = 0.0, tail = 0.0;
  const int tail_start = (5 * (n_ / 2)) / 6;
  for (int l = 0; l <= n_ / 2; ++l) {
    const double a = std::abs(spec[l]);
    peak = std::max(peak, a);
    if (l >= tail_start) tail = std::max(tail, a);
  }
  return peak > 0.0 ? tail / peak : 0.0;
}

double l2_norm(const Field& f) {
  double sum = 0.0, comp = 0.0;
  for (double x : f.v) {
    const double y = x * x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return std::sqrt(sum * (f.grid->length() / f.grid->n()));
}

double linf_norm(const Field& f) {
  double m = 0.0;
  for (double x : f.v) m = std::max(m, std::abs(x));
  return m;
}

double min_value(const Field& f) {
  double m = f.v[0];
  for (double x : f.v) m = std::min(m, x);
  return m;
}

double max_value(const Field& f) {
  double m = f.v[0];
  for (double x : f.v) m = std::max(m, x);
  return m;
}

double require_at_least(const Field& f, double floor, const char* what) {
  const double m = min_value(f);
  if (!(m >= floor)) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "%s fell below the floor: min %.6e < %.6e", what, m,
                  floor);
    throw std::domain_error(msg);
  }
  return m;
}

// --- serialization -------------------------------------------------------

void write_field_csv(const Field& f, const std::string& path, const std::string& name) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_field_csv: cannot open " + path);
  out << "x," << name << "\n";
  char line[80];
  const Grid& g = *f.grid;
  for (int j = 0; j < g.n(); ++j) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", g.node(j), f.v[j]);
    out << line;
  }
}

void write_field_binary(const Field& f, const std::string& path,
                        const std::string& name, double time) {
  nlohmann::json header;
  header["field"] = name;
  header["n"] = f.grid->n();
  header["length"] = f.grid->length();
  header["time"] = time;
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("write_field_binary: cannot open " + path);
  out << header.dump() << "\n";
  out.write(reinterpret_cast<const char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * sizeof(double)));
}

FieldData read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_field_binary: cannot open " + path);
  std::string header_line;
  std::getline(in, header_line);
  const nlohmann::json header = nlohmann::json::parse(header_line);
  FieldData data;
  data.name = header.at("field").get<std::string>();
  data.n = header.at("n").get<int>();
  data.length = header.at("length").get<double>();
  data.time = header.at("time").get<double>();
  data.values.resize(data.n);
  in.read(reinterpret_cast<char*>(data.values.data()),
          static_cast<std::streamsize>(data.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("read_field_binary: truncated payload in " + path);
  return data;
}

}  // namespace nsk
