#include <algorithm>

#include "saltrk/segmentation.hpp"

namespace saltrk {

std::size_t Trimap::count(TrimapLabel l) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

Trimap seeds_from_saliency(const SaliencyMap& saliency, const TargetState& s, double fg_fraction, int bg_margin) {
  const Grid& m = saliency.values;
  Trimap t(m.width(), m.height());
  const int x0 = std::max(s.left(), 0), y0 = std::max(s.top(), 0);
  const int x1 = std::min(s.left() + s.w, m.width()), y1 = std::min(s.top() + s.h, m.height());
  const double peak = m.max();
  const double cut = fg_fraction * peak;

  const int rx0 = std::max(s.left() - bg_margin, 0), ry0 = std::max(s.top() - bg_margin, 0);
  const int rx1 = std::min(s.left() + s.w + bg_margin, m.width()), ry1 = std::min(s.top() + s.h + bg_margin, m.height());
  for (int y = ry0; y < ry1; ++y) {
    for (int x = rx0; x < rx1; ++x) {
      const bool inside = x >= x0 && x < x1 && y >= y0 && y < y1;
      if (!inside) t.at(x, y) = TrimapLabel::Background;
      else if (peak > 0.0 && m(x, y) >= cut) t.at(x, y) = TrimapLabel::Foreground;
    }
  }
  return t;
}

}  // namespace saltrk
