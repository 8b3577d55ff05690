#include "inscribin/image_io.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace inscribin {

namespace {

cv::Mat load_gray_mat(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::Io, "no such file: " + path.string());
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (mat.empty()) fail(ErrorKind::Io, "cannot decode image: " + path.string());
  return mat;
}

template <typename R>
R from_mat(const cv::Mat& mat, bool binarize) {
  R out(mat.cols, mat.rows);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* src = mat.ptr<std::uint8_t>(y);
    auto* dst = out.row(y);
    for (int x = 0; x < mat.cols; ++x) dst[x] = binarize ? (src[x] != 0 ? 1 : 0) : src[x];
  }
  return out;
}

void save(const std::filesystem::path& path, const cv::Mat& mat) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    fail(ErrorKind::Io, "cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) fail(ErrorKind::Io, "cannot write " + path.string());
}

}  // namespace

GrayImage read_gray(const std::filesystem::path& path) {
  return from_mat<GrayImage>(load_gray_mat(path), false);
}

BinaryMask read_mask(const std::filesystem::path& path) {
  return from_mat<BinaryMask>(load_gray_mat(path), true);
}

void write_gray(const std::filesystem::path& path, const GrayImage& img) {
  cv::Mat mat(img.height(), img.width(), CV_8UC1);
  for (int y = 0; y < img.height(); ++y) std::copy(img.row(y), img.row(y) + img.width(), mat.ptr<std::uint8_t>(y));
  save(path, mat);
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  cv::Mat mat(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y) {
    const auto* src = mask.row(y);
    auto* dst = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.width(); ++x) dst[x] = src[x] ? 255 : 0;
  }
  save(path, mat);
}

void write_probability(const std::filesystem::path& path, const ProbabilityMap& prob) {
  cv::Mat mat(prob.height(), prob.width(), CV_8UC1);
  for (int y = 0; y < prob.height(); ++y) {
    const auto* src = prob.row(y);
    auto* dst = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < prob.width(); ++x) {
      dst[x] = static_cast<std::uint8_t>(std::lround(std::clamp(src[x], 0.0f, 1.0f) * 255.0f));
    }
  }
  save(path, mat);
}

void write_overlay(const std::filesystem::path& path, const GrayImage& img, const BinaryMask& mask) {
  if (!img.same_shape(mask)) fail(ErrorKind::DimMismatch, "overlay mask does not match image");
  cv::Mat mat(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    const auto* g = img.row(y);
    const auto* m = mask.row(y);
    auto* dst = mat.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width(); ++x) {
      const std::uint8_t v = g[x];
      if (m[x]) {
        // BGR: half intensity, red channel saturated.
        dst[x] = cv::Vec3b(static_cast<std::uint8_t>(v / 2), static_cast<std::uint8_t>(v / 2), 255);
      } else {
        dst[x] = cv::Vec3b(v, v, v);
      }
    }
  }
  save(path, mat);
}

}  // namespace inscribin
