#include <algorithm>
#include <climits>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>

#include <google/protobuf/io/coded_stream.h>
#include <google/protobuf/io/zero_copy_stream_impl.h>
#include <opencv2/dnn.hpp>

#include "inscribin/backends.hpp"
#include "inscribin/imgcore.hpp"
#include "onnx_signature.pb.h"

namespace inscribin {

namespace {

constexpr int kOnnxFloat = 1;

std::string describe_shape(const onnx::ValueInfoProto& info) {
  std::string out = "[";
  const auto& dims = info.type().tensor_type().shape().dim();
  for (int i = 0; i < dims.size(); ++i) {
    if (i) out += ",";
    out += dims[i].has_dim_value() ? std::to_string(dims[i].dim_value()) : dims[i].dim_param();
  }
  return out + "]";
}

// N x 1 x 512 x 512 float32, where N may be symbolic or any fixed value.
void check_tensor(const onnx::ValueInfoProto& info, const std::string& role) {
  if (!info.type().has_tensor_type() || info.type().tensor_type().elem_type() != kOnnxFloat) {
    fail(ErrorKind::SignatureMismatch, role + " tensor '" + info.name() + "' is not float32");
  }
  const auto& dims = info.type().tensor_type().shape().dim();
  const bool ok = dims.size() == 4 && dims[1].has_dim_value() && dims[1].dim_value() == 1 &&
                  dims[2].has_dim_value() && dims[2].dim_value() == kModelSide && dims[3].has_dim_value() &&
                  dims[3].dim_value() == kModelSide;
  if (!ok) {
    fail(ErrorKind::SignatureMismatch, role + " tensor '" + info.name() + "' has shape " + describe_shape(info) +
                                           ", expected [N,1," + std::to_string(kModelSide) + "," +
                                           std::to_string(kModelSide) + "]");
  }
}

void check_signature(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ModelLoadError, "cannot open model " + path.string());
  google::protobuf::io::IstreamInputStream raw(&in);
  google::protobuf::io::CodedInputStream coded(&raw);
  coded.SetTotalBytesLimit(INT_MAX);
  onnx::ModelProto model;
  if (!model.ParseFromCodedStream(&coded) || !model.has_graph()) {
    fail(ErrorKind::ModelLoadError, "not an ONNX model: " + path.string());
  }

  std::set<std::string> initializers;
  for (const auto& t : model.graph().initializer()) initializers.insert(t.name());
  std::vector<const onnx::ValueInfoProto*> inputs;
  for (const auto& v : model.graph().input()) {
    if (!initializers.contains(v.name())) inputs.push_back(&v);
  }
  if (inputs.size() != 1 || inputs.front()->name() != "input") {
    fail(ErrorKind::SignatureMismatch, "model must have exactly one graph input named 'input'");
  }
  if (model.graph().output_size() != 1 || model.graph().output(0).name() != "prob") {
    fail(ErrorKind::SignatureMismatch, "model must have exactly one graph output named 'prob'");
  }
  check_tensor(*inputs.front(), "input");
  check_tensor(model.graph().output(0), "output");
}

class ModelBinarizer final : public PatchBinarizer {
 public:
  explicit ModelBinarizer(const std::filesystem::path& path) : path_(path) {
    if (!std::filesystem::is_regular_file(path)) fail(ErrorKind::ModelLoadError, "no such model file: " + path.string());
    check_signature(path);
    try {
      net_ = cv::dnn::readNetFromONNX(path.string());
    } catch (const cv::Exception& e) {
      fail(ErrorKind::ModelLoadError, "runtime rejected " + path.string() + ": " + e.what());
    }
    if (net_.empty()) fail(ErrorKind::ModelLoadError, "runtime produced an empty network for " + path.string());
  }

  std::string name() const override { return "model:" + path_.string(); }
  std::optional<int> input_side() const override { return kModelSide; }

  ProbabilityMap predict(const GrayImage& patch, const Window&) const override {
    const GrayImage sized =
        patch.width() == kModelSide && patch.height() == kModelSide ? patch : resize_gray(patch, kModelSide, kModelSide);
    const int shape[] = {1, 1, kModelSide, kModelSide};
    cv::Mat blob(4, shape, CV_32F);
    auto* dst = blob.ptr<float>();
    for (auto v : sized.pixels()) *dst++ = static_cast<float>(v) / 255.0f;

    cv::Mat result;
    {
      // cv::dnn::Net is not safe for concurrent forward passes.
      std::lock_guard lock(mutex_);
      try {
        net_.setInput(blob, "input");
        result = net_.forward().clone();
      } catch (const cv::Exception& e) {
        fail(ErrorKind::InferenceError, std::string("forward pass failed: ") + e.what());
      }
    }
    if (result.total() != static_cast<std::size_t>(kModelSide) * kModelSide || result.type() != CV_32F) {
      fail(ErrorKind::InferenceError, "model produced " + std::to_string(result.total()) + " values, expected " +
                                          std::to_string(kModelSide * kModelSide));
    }
    ProbabilityMap prob(kModelSide, kModelSide);
    const auto* src = result.ptr<float>();
    auto out = prob.pixels();
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!std::isfinite(src[i])) fail(ErrorKind::InferenceError, "model produced a non-finite probability");
      out[i] = std::clamp(src[i], 0.0f, 1.0f);
    }
    if (patch.width() == kModelSide && patch.height() == kModelSide) return prob;
    return resize_probability(prob, patch.width(), patch.height());
  }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  mutable cv::dnn::Net net_;
};

}  // namespace

std::unique_ptr<PatchBinarizer> model_binarizer(const std::filesystem::path& model_path) {
  return std::make_unique<ModelBinarizer>(model_path);
}

}  // namespace inscribin
