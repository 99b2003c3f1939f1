#ifndef DSGD_IDX_HPP
#define DSGD_IDX_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "dsgd/network.hpp"

namespace dsgd {

enum class IdxErrorKind { Io, BadMagic, Truncated, CountMismatch, LabelOutOfRange };

class IdxError : public std::runtime_error {
 public:
  IdxError(IdxErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  IdxErrorKind kind() const { return kind_; }

 private:
  IdxErrorKind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Images scaled to [0, 1], one row per image; labels one-hot of length n_out.
Dataset parse_idx(std::span<const unsigned char> images, std::span<const unsigned char> labels,
                  std::size_t n_out);

Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::size_t n_out);

}  // namespace dsgd

#endif  // DSGD_IDX_HPP
