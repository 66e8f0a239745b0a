#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

namespace bzmarble {

class RowBandPool;

/// Active-cell mask of the simulated marble.
///
/// The lattice is a dense row-major square with the disc inscribed in it.
/// Storage for fields carries a one-cell halo of zeros around the square so
/// the stencil never needs bounds checks; `padded_index` maps lattice
/// coordinates into that storage.
class DomainMask {
 public:
  /// Active span of one row, [begin, end). Empty when begin == end.
  struct RowSpan {
    int begin = 0;
    int end = 0;
  };

  /// Disc of the given radius centred in a (2r+1)x(2r+1) square.
  /// Throws InvalidDomain for radius < 2.
  static DomainMask disc(int radius_nodes);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int radius_nodes() const noexcept { return radius_; }
  int center_x() const noexcept { return radius_; }
  int center_y() const noexcept { return radius_; }

  /// False for coordinates outside the bounding square.
  bool active(int x, int y) const noexcept;
  std::size_t active_count() const noexcept { return active_count_; }
  RowSpan row_span(int y) const { return spans_.at(static_cast<std::size_t>(y)); }

  /// Number of active 4-neighbours of (x, y).
  int degree(int x, int y) const;

  int stride() const noexcept { return width_ + 2; }
  std::size_t padded_size() const noexcept {
    return static_cast<std::size_t>(width_ + 2) * static_cast<std::size_t>(height_ + 2);
  }
  std::size_t padded_index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y + 1) * static_cast<std::size_t>(stride()) +
           static_cast<std::size_t>(x + 1);
  }
  /// Neighbour degree per cell in padded layout (0 on inactive and halo cells).
  const double* degree_data() const noexcept { return degree_.data(); }

 private:
  DomainMask() = default;

  int width_ = 0;
  int height_ = 0;
  int radius_ = 0;
  std::size_t active_count_ = 0;
  std::vector<std::uint8_t> active_;  // unpadded, row-major
  std::vector<RowSpan> spans_;
  std::vector<double> degree_;  // padded
};

/// A real value per lattice cell; inactive cells are held at exactly 0.
class ScalarField {
 public:
  ScalarField(std::shared_ptr<const DomainMask> mask, double fill_active = 0.0);

  const DomainMask& mask() const noexcept { return *mask_; }
  const std::shared_ptr<const DomainMask>& mask_ptr() const noexcept { return mask_; }

  /// Value at (x, y); 0 for inactive or out-of-range cells.
  double at(int x, int y) const noexcept;
  /// Throws InvalidParameter when (x, y) is not an active cell.
  void set(int x, int y, double value);
  void fill(double value);

  /// Pointer to cell (0, y) in padded storage. Valid for x in [-1, width].
  double* row(int y) noexcept { return values_.data() + mask_->padded_index(0, y); }
  const double* row(int y) const noexcept { return values_.data() + mask_->padded_index(0, y); }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  bool all_finite() const noexcept;
  /// True when every inactive and halo cell holds exactly 0.
  bool inactive_is_zero() const noexcept;

  friend bool operator==(const ScalarField& a, const ScalarField& b) noexcept {
    return a.mask_ == b.mask_ && a.values_ == b.values_;
  }

 private:
  std::shared_ptr<const DomainMask> mask_;
  std::vector<double> values_;
};

/// Five-node Laplacian with zero-flux edges: missing neighbours contribute
/// nothing and reduce the centre weight. Throws InvalidParameter for dx <= 0.
ScalarField laplacian5(const ScalarField& field, double dx, RowBandPool* pool = nullptr);

/// Sum over active cells in row-major order.
double total_mass(const ScalarField& field) noexcept;

/// Binary graymap (P5, maxval 255): values clamped to [0, 1], inactive cells 0.
void write_pgm(const ScalarField& field, std::ostream& out);

/// One line per lattice row, comma separated; inactive cells are empty.
void write_csv_grid(const ScalarField& field, std::ostream& out);

}  // namespace bzmarble
