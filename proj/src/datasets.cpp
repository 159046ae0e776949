#include "spikenas/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "spikenas/errors.hpp"

namespace spikenas {

namespace {

uint32_t read_be_u32(std::ifstream& f, const std::string& path, int64_t& offset) {
  unsigned char buf[4];
  f.read(reinterpret_cast<char*>(buf), 4);
  if (!f)
    throw DataError(path + ": truncated at byte " + std::to_string(offset));
  offset += 4;
  return (static_cast<uint32_t>(buf[0]) << 24) | (static_cast<uint32_t>(buf[1]) << 16) |
         (static_cast<uint32_t>(buf[2]) << 8) | static_cast<uint32_t>(buf[3]);
}

std::vector<unsigned char> read_bytes(std::ifstream& f, int64_t count, const std::string& path,
                                      int64_t& offset) {
  std::vector<unsigned char> buf(static_cast<size_t>(count));
  f.read(reinterpret_cast<char*>(buf.data()), count);
  if (!f)
    throw DataError(path + ": truncated at byte " + std::to_string(offset));
  offset += count;
  return buf;
}

}  // namespace

ImageDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream imgf(images_path, std::ios::binary);
  if (!imgf) throw DataError("cannot open " + images_path);
  int64_t off = 0;
  const uint32_t magic = read_be_u32(imgf, images_path, off);
  if (magic != 0x00000803u)
    throw DataError(images_path + ": bad image magic at byte 0 (got " + std::to_string(magic) + ")");
  const int64_t n = read_be_u32(imgf, images_path, off);
  const int64_t rows = read_be_u32(imgf, images_path, off);
  const int64_t cols = read_be_u32(imgf, images_path, off);
  auto pixels = read_bytes(imgf, n * rows * cols, images_path, off);

  std::ifstream labf(labels_path, std::ios::binary);
  if (!labf) throw DataError("cannot open " + labels_path);
  int64_t loff = 0;
  const uint32_t lmagic = read_be_u32(labf, labels_path, loff);
  if (lmagic != 0x00000801u)
    throw DataError(labels_path + ": bad label magic at byte 0 (got " + std::to_string(lmagic) + ")");
  const int64_t ln = read_be_u32(labf, labels_path, loff);
  if (ln != n)
    throw DataError(labels_path + ": label count " + std::to_string(ln) +
                    " does not match image count " + std::to_string(n));
  auto labels_raw = read_bytes(labf, ln, labels_path, loff);

  ImageDataset ds;
  ds.name = "idx";
  ds.images = Tensor({n, 3, rows, cols});
  for (int64_t i = 0; i < n; ++i) {
    const unsigned char* src = pixels.data() + i * rows * cols;
    for (int64_t c = 0; c < 3; ++c) {
      float* dst = ds.images.data() + (i * 3 + c) * rows * cols;
      for (int64_t j = 0; j < rows * cols; ++j) dst[j] = static_cast<float>(src[j]) / 255.0f;
    }
  }
  ds.labels.reserve(static_cast<size_t>(n));
  int max_label = 0;
  for (auto b : labels_raw) {
    ds.labels.push_back(static_cast<int>(b));
    max_label = std::max(max_label, static_cast<int>(b));
  }
  ds.num_classes = max_label + 1;
  return ds;
}

ImageDataset load_cifar_binary(const std::string& path) {
  constexpr int64_t kRecord = 3073;
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw DataError("cannot open " + path);
  const int64_t bytes = static_cast<int64_t>(f.tellg());
  if (bytes == 0 || bytes % kRecord != 0)
    throw DataError(path + ": size " + std::to_string(bytes) + " is not a multiple of 3073");
  const int64_t n = bytes / kRecord;
  f.seekg(0);

  ImageDataset ds;
  ds.name = "cifar10";
  ds.num_classes = 10;
  ds.images = Tensor({n, 3, 32, 32});
  ds.labels.resize(static_cast<size_t>(n));
  std::vector<unsigned char> rec(kRecord);
  for (int64_t i = 0; i < n; ++i) {
    f.read(reinterpret_cast<char*>(rec.data()), kRecord);
    if (!f) throw DataError(path + ": truncated at byte " + std::to_string(i * kRecord));
    ds.labels[static_cast<size_t>(i)] = static_cast<int>(rec[0]);
    float* dst = ds.images.data() + i * 3 * 1024;
    for (int64_t j = 0; j < 3072; ++j) dst[j] = static_cast<float>(rec[1 + j]) / 255.0f;
  }
  return ds;
}

ImageDataset load_cifar_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  for (int i = 1; i <= 5; ++i) {
    const auto p = fs::path(dir) / ("data_batch_" + std::to_string(i) + ".bin");
    if (fs::exists(p)) files.push_back(p.string());
  }
  if (files.empty()) throw DataError("no data_batch_*.bin files under " + dir);

  ImageDataset all;
  for (const auto& f : files) {
    ImageDataset part = load_cifar_binary(f);
    if (all.size() == 0) {
      all = std::move(part);
      continue;
    }
    const int64_t n0 = all.size(), n1 = part.size();
    Tensor merged({n0 + n1, 3, 32, 32});
    std::copy(all.images.data(), all.images.data() + all.images.numel(), merged.data());
    std::copy(part.images.data(), part.images.data() + part.images.numel(),
              merged.data() + all.images.numel());
    all.images = std::move(merged);
    all.labels.insert(all.labels.end(), part.labels.begin(), part.labels.end());
  }
  return all;
}

ImageDataset make_synthetic(int classes, int per_class, int64_t hw, uint64_t seed,
                            const std::string& name) {
  Rng rng(seed);
  const int64_t n = static_cast<int64_t>(classes) * per_class;

  // Per-class, per-channel mixtures of oriented gratings; samples add noise.
  struct Grating {
    double fx, fy, phase, amp;
  };
  std::vector<std::array<std::vector<Grating>, 3>> protos(static_cast<size_t>(classes));
  for (auto& proto : protos)
    for (auto& ch : proto) {
      const int num = 3;
      for (int g = 0; g < num; ++g)
        ch.push_back({rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0), rng.uniform(0.0, 2.0 * M_PI),
                      rng.uniform(0.08, 0.22)});
    }

  ImageDataset ds;
  ds.name = name;
  ds.num_classes = classes;
  ds.images = Tensor({n, 3, hw, hw});
  ds.labels.resize(static_cast<size_t>(n));

  int64_t idx = 0;
  for (int cls = 0; cls < classes; ++cls) {
    for (int s = 0; s < per_class; ++s, ++idx) {
      ds.labels[static_cast<size_t>(idx)] = cls;
      const double brightness = rng.uniform(-0.05, 0.05);
      for (int64_t c = 0; c < 3; ++c) {
        float* dst = ds.images.data() + (idx * 3 + c) * hw * hw;
        const auto& gratings = protos[static_cast<size_t>(cls)][static_cast<size_t>(c)];
        for (int64_t y = 0; y < hw; ++y)
          for (int64_t x = 0; x < hw; ++x) {
            double v = 0.5 + brightness;
            for (const auto& g : gratings)
              v += g.amp * std::cos(2.0 * M_PI * (g.fx * static_cast<double>(x) +
                                                  g.fy * static_cast<double>(y)) /
                                        static_cast<double>(hw) +
                                    g.phase);
            v += rng.normal() * 0.08;
            dst[y * hw + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
          }
      }
    }
  }
  return ds;
}

namespace {

ImageDataset gather(const ImageDataset& ds, const std::vector<int64_t>& idx) {
  ImageDataset out;
  out.name = ds.name;
  out.num_classes = ds.num_classes;
  out.normalized = ds.normalized;
  out.norm_mean = ds.norm_mean;
  out.norm_std = ds.norm_std;
  const int64_t chw = ds.images.numel() / ds.size();
  out.images = Tensor({static_cast<int64_t>(idx.size()), ds.images.dim(1), ds.images.dim(2),
                       ds.images.dim(3)});
  out.labels.resize(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    std::copy(ds.images.data() + idx[i] * chw, ds.images.data() + (idx[i] + 1) * chw,
              out.images.data() + static_cast<int64_t>(i) * chw);
    out.labels[i] = ds.labels[static_cast<size_t>(idx[i])];
  }
  return out;
}

}  // namespace

std::pair<ImageDataset, ImageDataset> split_train_val(const ImageDataset& ds, double train_ratio,
                                                      uint64_t seed) {
  const int64_t n = ds.size();
  if (n < 2) throw DataError("split_train_val: need at least 2 samples");
  std::vector<int64_t> idx(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  const int64_t n_train = static_cast<int64_t>(std::llround(train_ratio * static_cast<double>(n)));
  std::vector<int64_t> ti(idx.begin(), idx.begin() + n_train);
  std::vector<int64_t> vi(idx.begin() + n_train, idx.end());
  return {gather(ds, ti), gather(ds, vi)};
}

ImageDataset stratified_subset(const ImageDataset& ds, int per_class, uint64_t seed) {
  std::vector<std::vector<int64_t>> by_class(static_cast<size_t>(ds.num_classes));
  for (int64_t i = 0; i < ds.size(); ++i)
    by_class[static_cast<size_t>(ds.labels[static_cast<size_t>(i)])].push_back(i);
  Rng rng(seed);
  std::vector<int64_t> keep;
  for (auto& cls : by_class) {
    rng.shuffle(cls);
    const size_t take = std::min(cls.size(), static_cast<size_t>(per_class));
    keep.insert(keep.end(), cls.begin(), cls.begin() + static_cast<int64_t>(take));
  }
  std::sort(keep.begin(), keep.end());
  return gather(ds, keep);
}

void normalize_with_train_stats(ImageDataset& train, std::vector<ImageDataset*> others) {
  if (train.normalized) throw DataError("normalize: training split already normalized");
  const int64_t n = train.size(), hw2 = train.images.dim(2) * train.images.dim(3);
  std::array<double, 3> mean{0, 0, 0}, var{0, 0, 0};
  for (int64_t c = 0; c < 3; ++c) {
    double acc = 0.0, acc2 = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      const float* src = train.images.data() + (i * 3 + c) * hw2;
      for (int64_t j = 0; j < hw2; ++j) {
        acc += src[j];
        acc2 += static_cast<double>(src[j]) * src[j];
      }
    }
    const double m = acc / static_cast<double>(n * hw2);
    mean[static_cast<size_t>(c)] = m;
    var[static_cast<size_t>(c)] =
        std::max(acc2 / static_cast<double>(n * hw2) - m * m, 1e-8);
  }

  auto apply = [&](ImageDataset& ds) {
    const int64_t m = ds.size(), s = ds.images.dim(2) * ds.images.dim(3);
    for (int64_t c = 0; c < 3; ++c) {
      const float mu = static_cast<float>(mean[static_cast<size_t>(c)]);
      const float inv = static_cast<float>(1.0 / std::sqrt(var[static_cast<size_t>(c)]));
      for (int64_t i = 0; i < m; ++i) {
        float* dst = ds.images.data() + (i * 3 + c) * s;
        for (int64_t j = 0; j < s; ++j) dst[j] = (dst[j] - mu) * inv;
      }
    }
    ds.normalized = true;
    for (int64_t c = 0; c < 3; ++c) {
      ds.norm_mean[static_cast<size_t>(c)] = mean[static_cast<size_t>(c)];
      ds.norm_std[static_cast<size_t>(c)] = std::sqrt(var[static_cast<size_t>(c)]);
    }
  };
  apply(train);
  for (auto* other : others)
    if (other && !other->normalized) apply(*other);
}

void augment(Tensor& batch, const AugmentConfig& cfg, Rng& rng) {
  const int64_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  const int pad = 4;
  std::vector<float> padded;
  for (int64_t i = 0; i < n; ++i) {
    if (cfg.pad_crop) {
      const int64_t ph = h + 2 * pad, pw = w + 2 * pad;
      padded.assign(static_cast<size_t>(c * ph * pw), 0.0f);
      for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t y = 0; y < h; ++y)
          std::copy(&batch.at4(i, ch, y, 0), &batch.at4(i, ch, y, 0) + w,
                    padded.data() + (ch * ph + y + pad) * pw + pad);
      const int64_t oy = rng.uniform_int(2 * pad + 1);
      const int64_t ox = rng.uniform_int(2 * pad + 1);
      for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t y = 0; y < h; ++y)
          std::copy(padded.data() + (ch * ph + y + oy) * pw + ox,
                    padded.data() + (ch * ph + y + oy) * pw + ox + w, &batch.at4(i, ch, y, 0));
    }
    if (cfg.flip_prob > 0.0 && rng.bernoulli(cfg.flip_prob)) {
      for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t y = 0; y < h; ++y)
          for (int64_t x = 0; x < w / 2; ++x)
            std::swap(batch.at4(i, ch, y, x), batch.at4(i, ch, y, w - 1 - x));
    }
    if (cfg.cutout_length > 0) {
      // center anywhere on the image, square clipped at the borders
      const int64_t cy = rng.uniform_int(h);
      const int64_t cx = rng.uniform_int(w);
      const int64_t half = cfg.cutout_length / 2;
      const int64_t y0 = std::max<int64_t>(0, cy - half), y1 = std::min(h, cy + half);
      const int64_t x0 = std::max<int64_t>(0, cx - half), x1 = std::min(w, cx + half);
      for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t y = y0; y < y1; ++y)
          for (int64_t x = x0; x < x1; ++x) batch.at4(i, ch, y, x) = 0.0f;
    }
  }
}

std::pair<Tensor, std::vector<int>> assemble_batch(const ImageDataset& ds,
                                                   const std::vector<int64_t>& indices) {
  const int64_t chw = ds.images.numel() / ds.size();
  Tensor batch({static_cast<int64_t>(indices.size()), ds.images.dim(1), ds.images.dim(2),
                ds.images.dim(3)});
  std::vector<int> labels(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) {
    std::copy(ds.images.data() + indices[i] * chw, ds.images.data() + (indices[i] + 1) * chw,
              batch.data() + static_cast<int64_t>(i) * chw);
    labels[i] = ds.labels[static_cast<size_t>(indices[i])];
  }
  return {std::move(batch), std::move(labels)};
}

}  // namespace spikenas
