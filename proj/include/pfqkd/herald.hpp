#pragma once

// Herald detector bookkeeping: which of the four herald detectors fired, and
// how many photons reached each of them.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string>

namespace pfqkd {

/// Herald detectors. D+ and D- sit behind the half-wave plate (X basis),
/// D_H and D_V on the direct arm (Z basis).
enum class Detector : std::uint8_t { plus = 0, minus = 1, h = 2, v = 3 };

inline constexpr int kHeraldClassCount = 16;

/// One of the 16 herald outcomes, stored as the set of detectors that clicked.
class HeraldClass {
 public:
  constexpr HeraldClass() = default;

  static constexpr HeraldClass from_mask(unsigned mask) { return HeraldClass(static_cast<std::uint8_t>(mask & 0xFu)); }

  static constexpr HeraldClass of(std::initializer_list<Detector> detectors) {
    unsigned mask = 0;
    for (Detector d : detectors) mask |= 1u << static_cast<unsigned>(d);
    return from_mask(mask);
  }

  static constexpr HeraldClass none() { return HeraldClass(); }
  static constexpr HeraldClass plus() { return of({Detector::plus}); }
  static constexpr HeraldClass minus() { return of({Detector::minus}); }
  static constexpr HeraldClass h() { return of({Detector::h}); }
  static constexpr HeraldClass v() { return of({Detector::v}); }

  static constexpr std::array<HeraldClass, kHeraldClassCount> all() {
    std::array<HeraldClass, kHeraldClassCount> out{};
    for (unsigned i = 0; i < out.size(); ++i) out[i] = from_mask(i);
    return out;
  }

  /// The four single-click classes, in the order H, V, +, -.
  static constexpr std::array<HeraldClass, 4> keygen() { return {h(), v(), plus(), minus()}; }

  constexpr unsigned mask() const { return mask_; }
  constexpr bool clicked(Detector d) const { return (mask_ >> static_cast<unsigned>(d)) & 1u; }
  constexpr int click_count() const {
    return static_cast<int>((mask_ & 1u) + ((mask_ >> 1) & 1u) + ((mask_ >> 2) & 1u) + ((mask_ >> 3) & 1u));
  }
  constexpr bool is_keygen() const { return click_count() == 1; }

  /// "0" for no click, otherwise the clicked detectors, e.g. "H", "HV+", "+-".
  std::string name() const {
    if (mask_ == 0) return "0";
    std::string s;
    if (clicked(Detector::h)) s += 'H';
    if (clicked(Detector::v)) s += 'V';
    if (clicked(Detector::plus)) s += '+';
    if (clicked(Detector::minus)) s += '-';
    return s;
  }

  /// Column-safe label: "none", "H", "V", "plus", "minus", "HVplus", ...
  std::string label() const {
    if (mask_ == 0) return "none";
    std::string s;
    if (clicked(Detector::h)) s += 'H';
    if (clicked(Detector::v)) s += 'V';
    if (clicked(Detector::plus)) s += "plus";
    if (clicked(Detector::minus)) s += "minus";
    return s;
  }

  friend constexpr bool operator==(HeraldClass, HeraldClass) = default;

 private:
  constexpr explicit HeraldClass(std::uint8_t mask) : mask_(mask) {}
  std::uint8_t mask_ = 0;
};

/// Photon numbers arriving at D+, D-, D_H and D_V.
struct HeraldCounts {
  int plus = 0;
  int minus = 0;
  int h = 0;
  int v = 0;

  constexpr int total() const { return plus + minus + h + v; }
  constexpr int at(Detector d) const {
    switch (d) {
      case Detector::plus: return plus;
      case Detector::minus: return minus;
      case Detector::h: return h;
      case Detector::v: return v;
    }
    return 0;
  }
  friend constexpr bool operator==(const HeraldCounts&, const HeraldCounts&) = default;
};

}  // namespace pfqkd
