#pragma once

#include <map>
#include <string>
#include <vector>

#include "tinyzone/client.hpp"
#include "tinyzone/netspec.hpp"

// Two-stage model conversion: generic framework ops are lowered to a
// Caffe-like IR (batchnorm split into batchnorm + scale), then convolution /
// batchnorm / scale / relu runs fold into single convolutional layers with
// remapped statistics.

namespace tinyzone {

enum class GenericKind {
    conv2d,
    batchnorm2d,
    linear,
    maxpool2d,
    avgpool2d,
    relu,
    softmax,
};

struct GenericOp {
    GenericKind kind = GenericKind::relu;
    int out_channels = 0;  // conv2d
    int kernel = 0;        // conv2d / maxpool2d
    int stride = 1;
    int pad = 0;
    int groups = 1;
    bool has_bias = false;
    int out_features = 0;  // linear
    std::vector<float> weight, bias;
    std::vector<float> gamma, beta, running_mean, running_var;  // batchnorm2d
};

struct GenericModel {
    int c = 0, h = 0, w = 0;
    std::vector<GenericOp> ops;
};

enum class CaffeKind {
    convolution,
    batchnorm,
    scale,
    pooling_max,
    pooling_avg,
    innerproduct,
    relu,
    softmax,
};

struct CaffeOp {
    CaffeKind kind = CaffeKind::relu;
    int out_channels = 0;
    int kernel = 0;
    int stride = 1;
    int pad = 0;
    int groups = 1;
    bool has_bias = false;
    int out_features = 0;
    std::vector<float> weight, bias;       // convolution / innerproduct
    std::vector<float> mean, variance;     // batchnorm
    std::vector<float> gamma, beta;        // scale
};

struct CaffeIR {
    int c = 0, h = 0, w = 0;
    std::vector<CaffeOp> ops;
};

struct FoldResult {
    NetworkSpec spec;
    WeightFile weights;
};

// conv2d -> convolution; batchnorm2d -> batchnorm + scale; linear ->
// innerproduct; pools and activations map 1:1. Unsupported kinds raise
// ConversionError naming the op.
CaffeIR lower_to_caffe(const GenericModel& model);

// convolution [+ batchnorm + scale] [+ relu] fuses into one convolutional
// layer. Weight remap: weights <- conv W, scales <- gamma, biases <- beta,
// rolling_variance <- var, rolling_mean <- mean - conv_bias (the conv bias
// folds into the mean, keeping the fused layer numerically identical).
FoldResult fold_to_tinylib(const CaffeIR& ir);

// Manifest: JSON {input:{c,h,w}, ops:[{kind, attrs, tensors}]} with tensors
// resolved from a sidecar binary (little-endian f32 with a name TOC).
GenericModel load_generic_model(const std::string& manifest_path);
std::map<std::string, std::vector<float>> read_tensor_store(const std::string& path);
void write_tensor_store(const std::string& path,
                        const std::map<std::string, std::vector<float>>& tensors);

} // namespace tinyzone
