/// @file grid.hpp
/// @brief Periodic collocation grid with Fourier differentiation, 2/3-rule
///        dealiasing, quadrature, and field serialization. FFT details stay
///        behind the implementation.

#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

namespace nsk {

class Grid;

/// Real scalar field sampled at the nodes of a Grid.
struct Field {
  std::shared_ptr<const Grid> grid;
  std::vector<double> v;

  std::size_t size() const { return v.size(); }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
};

/// Uniform periodic grid on [0, length) with n nodes, n a power of two >= 16.
/// Spectral operations use the real-to-complex transform; the quadrature
/// weight is length/n. Concurrent spectral calls on distinct buffers are safe;
/// construction is internally serialized around the FFT planner.
class Grid : public std::enable_shared_from_this<Grid> {
 public:
  static std::shared_ptr<const Grid> create(int n, double length);
  ~Grid();

  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  int n() const { return n_; }
  double length() const { return length_; }
  double dx() const { return length_ / n_; }
  double node(int j) const { return length_ * j / n_; }
  /// kappa_l = 2 pi l / length for l = 0 .. n/2.
  double wavenumber(int l) const { return kappa_[l]; }
  /// Largest retained mode index under the 2/3 rule: floor(n/3).
  int dealias_cutoff() const { return cutoff_; }

  Field make_field(double fill = 0.0) const;
  /// Samples fn(x) at the nodes.
  Field sample(double (*fn)(double)) const;
  template <typename F>
  Field sample_fn(F&& fn) const {
    Field f = make_field();
    for (int j = 0; j < n_; ++j) f.v[j] = fn(node(j));
    return f;
  }

  /// Spectral derivative of the given order (>= 1). Odd orders zero the
  /// Nyquist mode; the mean mode is annihilated exactly.
  Field deriv(const Field& f, int order) const;
  /// Zeroes all modes with |l| > dealias_cutoff().
  Field dealias(const Field& f) const;
  /// (length/n) * sum of values, compensated summation.
  double integrate(const Field& f) const;
  /// max |f_hat| over the top sixth of mode indices divided by max |f_hat|;
  /// the under-resolution monitor.
  double spectral_tail_ratio(const Field& f) const;

  // Raw-buffer primitives for allocation-free assembly loops. Complex buffers
  // hold n/2+1 entries; forward output is normalized so that entries are
  // trigonometric-polynomial coefficients.
  void fwd(const double* in, std::complex<double>* out) const;
  /// Inverse transform; the complex input buffer is destroyed.
  void inv_destroy(std::complex<double>* in, double* out) const;
  void apply_deriv(std::complex<double>* spec, int order) const;
  void apply_dealias(std::complex<double>* spec) const;
  /// Fused forward -> dealias (optional) -> (ik)^order -> inverse.
  void deriv_into(const double* in, double* out, int order, bool dealias) const;
  /// Fused forward -> dealias -> inverse.
  void dealias_into(const double* in, double* out) const;

 private:
  Grid(int n, double length);

  int n_;
  double length_;
  int cutoff_;
  std::vector<double> kappa_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

/// sqrt(integral of f^2).
double l2_norm(const Field& f);
double linf_norm(const Field& f);

double min_value(const Field& f);
double max_value(const Field& f);

/// Throws PositivityError (see dynamics.hpp) context-free: grid helper used by
/// state validation. Returns min value for diagnostics.
double require_at_least(const Field& f, double floor, const char* what);

// --- serialization -------------------------------------------------------

/// Two-column CSV "x,<name>" with 17 significant digits.
void write_field_csv(const Field& f, const std::string& path, const std::string& name);

/// Single-line JSON header {"field","n","length","time"} followed by n
/// little-endian doubles, row-major.
void write_field_binary(const Field& f, const std::string& path,
                        const std::string& name, double time);

struct FieldData {
  std::string name;
  int n = 0;
  double length = 0.0;
  double time = 0.0;
  std::vector<double> values;
};
FieldData read_field_binary(const std::string& path);

}  // namespace nsk
