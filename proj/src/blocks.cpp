#include "spikenas/blocks.hpp"

#include <sstream>

namespace spikenas {

std::string block_to_string(const BlockKind& k) {
  std::ostringstream os;
  switch (k.tag) {
    case BlockTag::skip: return "skip";
    case BlockTag::scb: os << "SCB_k" << k.kernel; return os.str();
    case BlockTag::srb: os << "SRB_k" << k.kernel; return os.str();
    case BlockTag::sib: os << "SIB_k" << k.kernel << "_e" << k.expand; return os.str();
    case BlockTag::channel_dup: return "dup";
    case BlockTag::maxpool_ds: return "maxpool_ds";
    case BlockTag::avgpool_ds: return "avgpool_ds";
    case BlockTag::gap: return "gap";
    case BlockTag::stem_conv: return "stem_conv";
    case BlockTag::fc_head: return "fc_head";
    case BlockTag::voting: return "voting";
  }
  return "?";
}

BlockKind block_from_string(const std::string& s) {
  if (s == "skip") return BlockKind::Skip();
  if (s == "SCB_k3") return BlockKind::Scb(3);
  if (s == "SCB_k5") return BlockKind::Scb(5);
  if (s == "SRB_k3") return BlockKind::Srb(3);
  if (s == "SRB_k5") return BlockKind::Srb(5);
  if (s == "SIB_k3_e1") return BlockKind::Sib(3, 1);
  if (s == "SIB_k3_e3") return BlockKind::Sib(3, 3);
  if (s == "SIB_k5_e1") return BlockKind::Sib(5, 1);
  if (s == "SIB_k5_e3") return BlockKind::Sib(5, 3);
  if (s == "maxpool_ds") return BlockKind::MaxPoolDs();
  if (s == "avgpool_ds") return BlockKind::AvgPoolDs();
  throw ConfigError("unknown block tag '" + s + "'");
}

std::vector<BlockKind> default_candidates() {
  return {BlockKind::Skip(), BlockKind::Scb(3), BlockKind::Scb(5), BlockKind::Srb(3),
          BlockKind::Srb(5)};
}

std::vector<BlockKind> sib_study_kinds() {
  return {BlockKind::Scb(3), BlockKind::Srb(3), BlockKind::Sib(3, 1), BlockKind::Sib(3, 3)};
}

int64_t neuron_count(const BlockKind& kind, int64_t h, int64_t w, int64_t c_in, int64_t c_out,
                     int stride) {
  const int64_t ho = h / stride, wo = w / stride;
  switch (kind.tag) {
    case BlockTag::skip:
    case BlockTag::channel_dup:
    case BlockTag::voting:
      return 0;
    case BlockTag::scb:
    case BlockTag::srb:
      return 2 * ho * wo * c_out;
    case BlockTag::sib:
      return h * w * (kind.expand * c_in) + ho * wo * (kind.expand * c_in) + ho * wo * c_out;
    case BlockTag::maxpool_ds:
    case BlockTag::avgpool_ds:
      return (h / 2) * (w / 2) * c_out;
    case BlockTag::gap:
      return c_out;
    case BlockTag::stem_conv:
      return h * w * c_out;
    case BlockTag::fc_head:
      return c_out;
  }
  return 0;
}

// Synaptic/affine parameters only; per-stage alphas are excluded so the count
// is invariant under the spiking/ReLU activation swap.
int64_t block_param_count(const BlockKind& kind, int64_t c_in, int64_t c_out, int stride, bool ann,
                          int64_t fc_in) {
  (void)ann;
  const int64_t k = kind.kernel;
  switch (kind.tag) {
    case BlockTag::skip:
    case BlockTag::channel_dup:
    case BlockTag::maxpool_ds:
    case BlockTag::avgpool_ds:
    case BlockTag::voting:
      return 0;
    case BlockTag::scb:
      return (c_out * c_in * k * k + c_out) + 2 * c_out + (c_out * c_out * k * k + c_out) +
             2 * c_out;
    case BlockTag::srb: {
      int64_t n = block_param_count(BlockKind::Scb(static_cast<int>(k)), c_in, c_out, stride, ann);
      if (c_in != c_out || stride != 1) n += c_out * c_in + c_out;  // 1x1 projection
      return n;
    }
    case BlockTag::sib: {
      const int64_t ce = c_in * kind.expand;
      return (ce * c_in + ce) + 2 * ce           // expand + bn
             + (ce * k * k + ce) + 2 * ce        // depthwise + bn
             + (c_out * ce + c_out) + 2 * c_out; // project + bn
    }
    case BlockTag::gap:
      return 0;
    case BlockTag::stem_conv:
      return (c_out * c_in * 3 * 3 + c_out) + 2 * c_out;
    case BlockTag::fc_head:
      return fc_in * c_out + c_out;
  }
  return 0;
}

}  // namespace spikenas
