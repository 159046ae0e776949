#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "spikenas/rng.hpp"
#include "spikenas/tensor.hpp"

namespace spikenas {

// Images are (n, 3, h, w) floats. Loaders return raw pixel values in [0, 1];
// normalize_with_train_stats applies per-channel standardization exactly once.
struct ImageDataset {
  Tensor images;
  std::vector<int> labels;
  int num_classes = 0;
  std::string name;
  bool normalized = false;
  std::array<double, 3> norm_mean{0, 0, 0};
  std::array<double, 3> norm_std{1, 1, 1};

  int64_t size() const { return images.empty() ? 0 : images.dim(0); }
  int64_t hw() const { return images.dim(2); }
};

// IDX (big-endian magic 0x803 for images, 0x801 for labels). Grayscale images
// are replicated to 3 channels. Parse errors carry the byte offset.
ImageDataset load_idx(const std::string& images_path, const std::string& labels_path);

// CIFAR-10 binary: 3073-byte records (1 label byte + 3 * 1024 pixel bytes).
ImageDataset load_cifar_binary(const std::string& path);

// All data_batch_*.bin files under dir, in index order.
ImageDataset load_cifar_dir(const std::string& dir);

// Procedurally generated classification set: per-class spatial frequency
// patterns plus per-sample noise. Used for toy runs and as the stand-in when
// no real dataset directory is configured.
ImageDataset make_synthetic(int classes, int per_class, int64_t hw, uint64_t seed,
                            const std::string& name = "synthetic");

// Deterministic shuffle + disjoint, exhaustive split.
std::pair<ImageDataset, ImageDataset> split_train_val(const ImageDataset& ds, double train_ratio,
                                                      uint64_t seed);

// Deterministic class-stratified subsample (per_class samples from each class,
// in dataset order after a seeded shuffle).
ImageDataset stratified_subset(const ImageDataset& ds, int per_class, uint64_t seed);

// Computes per-channel mean/std on `train`, standardizes train and any others.
void normalize_with_train_stats(ImageDataset& train, std::vector<ImageDataset*> others = {});

struct AugmentConfig {
  bool pad_crop = false;     // zero-pad by 4 then random crop back
  double flip_prob = 0.0;    // horizontal flip probability
  int cutout_length = 0;     // 0 disables cutout
};

// In-place augmentation of an assembled batch. Pure function of (batch, rng).
void augment(Tensor& batch, const AugmentConfig& cfg, Rng& rng);

// Gathers rows by index into a contiguous batch.
std::pair<Tensor, std::vector<int>> assemble_batch(const ImageDataset& ds,
                                                   const std::vector<int64_t>& indices);

}  // namespace spikenas
