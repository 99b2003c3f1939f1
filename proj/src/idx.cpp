#include "dsgd/idx.hpp"

#include <fstream>
#include <iterator>
#include <vector>

namespace dsgd {

namespace {

std::uint32_t read_be32(std::span<const unsigned char> b, std::size_t off, const char* what) {
  if (b.size() < off + 4)
    throw IdxError(IdxErrorKind::Truncated, std::string(what) + ": truncated header");
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

std::vector<unsigned char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxErrorKind::Io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Dataset parse_idx(std::span<const unsigned char> images, std::span<const unsigned char> labels,
                  std::size_t n_out) {
  if (n_out == 0) throw std::invalid_argument("parse_idx: n_out must be positive");
  if (read_be32(images, 0, "images") != kIdxImageMagic)
    throw IdxError(IdxErrorKind::BadMagic, "images: bad magic number");
  const std::size_t count = read_be32(images, 4, "images");
  const std::size_t rows = read_be32(images, 8, "images");
  const std::size_t cols = read_be32(images, 12, "images");
  const std::size_t dim = rows * cols;
  if (images.size() < 16 + count * dim)
    throw IdxError(IdxErrorKind::Truncated, "images: expected " + std::to_string(count * dim) +
                                                " pixel bytes, found " +
                                                std::to_string(images.size() - 16));

  if (read_be32(labels, 0, "labels") != kIdxLabelMagic)
    throw IdxError(IdxErrorKind::BadMagic, "labels: bad magic number");
  const std::size_t nlabels = read_be32(labels, 4, "labels");
  if (nlabels != count)
    throw IdxError(IdxErrorKind::CountMismatch, "image count " + std::to_string(count) +
                                                    " != label count " + std::to_string(nlabels));
  if (labels.size() < 8 + count)
    throw IdxError(IdxErrorKind::Truncated, "labels: truncated body");
  if (count == 0 || dim == 0) throw IdxError(IdxErrorKind::Truncated, "images: no data");

  std::vector<double> x(count * dim);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = images[16 + i] / 255.0;
  std::vector<double> z(count * n_out, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t lab = labels[8 + i];
    if (lab >= n_out)
      throw IdxError(IdxErrorKind::LabelOutOfRange, "label " + std::to_string(lab) + " at index " +
                                                        std::to_string(i) + " >= n_out " +
                                                        std::to_string(n_out));
    z[i * n_out + lab] = 1.0;
  }
  return Dataset(dim, n_out, std::move(x), std::move(z));
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::size_t n_out) {
  const auto img = slurp(images_path);
  const auto lab = slurp(labels_path);
  return parse_idx(img, lab, n_out);
}

}  // namespace dsgd
