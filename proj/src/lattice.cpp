#include "bzmarble/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "bzmarble/error.hpp"
#include "bzmarble/numfmt.hpp"
#include "bzmarble/parallel.hpp"

namespace bzmarble {

DomainMask DomainMask::disc(int radius_nodes) {
  if (radius_nodes < 2) {
    throw InvalidDomain("disc radius must be at least 2 nodes, got " + std::to_string(radius_nodes));
  }
  DomainMask m;
  m.radius_ = radius_nodes;
  m.width_ = 2 * radius_nodes + 1;
  m.height_ = m.width_;
  m.active_.assign(static_cast<std::size_t>(m.width_) * static_cast<std::size_t>(m.height_), 0);
  m.spans_.resize(static_cast<std::size_t>(m.height_));

  const long r2 = static_cast<long>(radius_nodes) * radius_nodes;
  for (int y = 0; y < m.height_; ++y) {
    RowSpan span{m.width_, m.width_};
    for (int x = 0; x < m.width_; ++x) {
      const long dx = x - m.center_x();
      const long dy = y - m.center_y();
      if (dx * dx + dy * dy <= r2) {
        m.active_[static_cast<std::size_t>(y) * m.width_ + x] = 1;
        ++m.active_count_;
        if (span.begin == m.width_) span.begin = x;
        span.end = x + 1;
      }
    }
    if (span.begin == m.width_) span = {0, 0};
    m.spans_[static_cast<std::size_t>(y)] = span;
  }

  m.degree_.assign(m.padded_size(), 0.0);
  for (int y = 0; y < m.height_; ++y) {
    for (int x = 0; x < m.width_; ++x) {
      if (m.active(x, y)) m.degree_[m.padded_index(x, y)] = m.degree(x, y);
    }
  }
  return m;
}

bool DomainMask::active(int x, int y) const noexcept {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
  return active_[static_cast<std::size_t>(y) * width_ + x] != 0;
}

int DomainMask::degree(int x, int y) const {
  return static_cast<int>(active(x - 1, y)) + static_cast<int>(active(x + 1, y)) +
         static_cast<int>(active(x, y - 1)) + static_cast<int>(active(x, y + 1));
}

ScalarField::ScalarField(std::shared_ptr<const DomainMask> mask, double fill_active)
    : mask_(std::move(mask)), values_(mask_->padded_size(), 0.0) {
  fill(fill_active);
}

double ScalarField::at(int x, int y) const noexcept {
  if (!mask_->active(x, y)) return 0.0;
  return values_[mask_->padded_index(x, y)];
}

void ScalarField::set(int x, int y, double value) {
  if (!mask_->active(x, y)) {
    throw InvalidParameter("cell (" + std::to_string(x) + "," + std::to_string(y) + ") is not active");
  }
  values_[mask_->padded_index(x, y)] = value;
}

void ScalarField::fill(double value) {
  for (int y = 0; y < mask_->height(); ++y) {
    const auto span = mask_->row_span(y);
    std::fill(row(y) + span.begin, row(y) + span.end, value);
  }
}

bool ScalarField::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool ScalarField::inactive_is_zero() const noexcept {
  const int stride = mask_->stride();
  for (int py = 0; py < mask_->height() + 2; ++py) {
    for (int px = 0; px < stride; ++px) {
      const int x = px - 1;
      const int y = py - 1;
      if (!mask_->active(x, y) && values_[static_cast<std::size_t>(py) * stride + px] != 0.0) return false;
    }
  }
  return true;
}

ScalarField laplacian5(const ScalarField& field, double dx, RowBandPool* pool) {
  if (!(dx > 0.0)) throw InvalidParameter("grid spacing dx must be positive");
  const DomainMask& mask = field.mask();
  ScalarField out(field.mask_ptr());
  const double inv_dx2 = 1.0 / (dx * dx);
  const long stride = mask.stride();

  auto band = [&](unsigned, int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      const auto span = mask.row_span(y);
      const double* u = field.row(y);
      const double* deg = mask.degree_data() + mask.padded_index(0, y);
      double* o = out.row(y);
      for (int x = span.begin; x < span.end; ++x) {
        o[x] = ((u[x - 1] + u[x + 1]) + (u[x - stride] + u[x + stride]) - deg[x] * u[x]) * inv_dx2;
      }
    }
  };
  if (pool) {
    pool->run(mask.height(), band);
  } else {
    band(0, 0, mask.height());
  }
  return out;
}

double total_mass(const ScalarField& field) noexcept {
  const DomainMask& mask = field.mask();
  double sum = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    const auto span = mask.row_span(y);
    const double* u = field.row(y);
    for (int x = span.begin; x < span.end; ++x) sum += u[x];
  }
  return sum;
}

void write_pgm(const ScalarField& field, std::ostream& out) {
  const DomainMask& mask = field.mask();
  out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
  std::string row(static_cast<std::size_t>(mask.width()), '\0');
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      unsigned char level = 0;
      if (mask.active(x, y)) {
        const double c = std::clamp(field.at(x, y), 0.0, 1.0);
        level = static_cast<unsigned char>(std::lround(c * 255.0));
      }
      row[static_cast<std::size_t>(x)] = static_cast<char>(level);
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

void write_csv_grid(const ScalarField& field, std::ostream& out) {
  const DomainMask& mask = field.mask();
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (x > 0) out << ',';
      if (mask.active(x, y)) out << format_double(field.at(x, y));
    }
    out << '\n';
  }
}

}  // namespace bzmarble
