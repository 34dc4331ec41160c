#pragma once

// Model checkpoint container (little-endian):
//
//   char[4]  magic "BZSG"
//   u16      format version (1)
//   u8       model kind: 1 = logreg, 2 = forest, 3 = unet
//   u32      cfg block length in bytes, followed by the cfg block
//   u32      number of parameter blocks
//   per block: u64 element count, then that many f64 values
//   u32      FNV-1a checksum of all preceding bytes
//
// cfg blocks:
//   logreg: u32 n_features, u32 iterations, f64 final_grad_norm
//   forest: u32 n_features, u32 n_trees, u8 balanced_subsample, u64 seed
//   unet:   u32 in_channels, depth, filters, kernel, pool, segment_length,
//           batch_size, max_epochs, patience; u64 seed; f64 learning_rate;
//           f64[4] channel means; f64[4] channel STDs
//
// Parameter blocks:
//   logreg: [weights], [intercept]
//   forest: one block per tree, 5 values per node
//           (feature, threshold, left, right, prob; feature = -1 for leaves)
//   unet:   per conv layer in network order, [weights (out,in,kernel)], [bias]

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "buzzdet/error.hpp"
#include "buzzdet/io.hpp"
#include "buzzdet/models/predict.hpp"

namespace buzzdet::models {

inline constexpr char kCheckpointMagic[4] = {'B', 'Z', 'S', 'G'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

enum class ModelKind : std::uint8_t { LogReg = 1, Forest = 2, UNet = 3 };

namespace detail {

inline void put_block(io::ByteWriter& w, const std::vector<double>& v) {
  w.put<std::uint64_t>(v.size());
  w.put_array(v);
}

inline std::vector<double> get_block(io::ByteReader& r) {
  const auto n = r.get<std::uint64_t>();
  return r.get_array<double>(static_cast<std::size_t>(n));
}

inline std::vector<double> get_block(io::ByteReader& r, std::size_t expected, const char* what) {
  auto v = get_block(r);
  if (v.size() != expected)
    throw FormatError(r.what() + ": " + what + " block has " + std::to_string(v.size()) + " values, expected " +
                      std::to_string(expected));
  return v;
}

}  // namespace detail

inline std::string encode_checkpoint(const AnyModel& model) {
  io::ByteWriter cfg;
  std::vector<std::vector<double>> blocks;
  ModelKind kind;
  if (const auto* lr = std::get_if<LogisticModel>(&model)) {
    kind = ModelKind::LogReg;
    cfg.put<std::uint32_t>(static_cast<std::uint32_t>(lr->weights.size()));
    cfg.put<std::uint32_t>(static_cast<std::uint32_t>(lr->iterations));
    cfg.put<double>(lr->final_grad_norm);
    blocks.push_back(lr->weights);
    blocks.push_back({lr->intercept});
  } else if (const auto* rf = std::get_if<ForestModel>(&model)) {
    kind = ModelKind::Forest;
    cfg.put<std::uint32_t>(static_cast<std::uint32_t>(rf->n_features));
    cfg.put<std::uint32_t>(static_cast<std::uint32_t>(rf->trees.size()));
    cfg.put<std::uint8_t>(rf->balanced_subsample ? 1 : 0);
    cfg.put<std::uint64_t>(rf->seed);
    for (const auto& t : rf->trees) {
      std::vector<double> b;
      b.reserve(t.nodes.size() * 5);
      for (const auto& n : t.nodes) {
        b.push_back(static_cast<double>(n.feature));
        b.push_back(n.threshold);
        b.push_back(static_cast<double>(n.left));
        b.push_back(static_cast<double>(n.right));
        b.push_back(n.prob);
      }
      blocks.push_back(std::move(b));
    }
  } else {
    const auto& un = std::get<UNetModel>(model);
    kind = ModelKind::UNet;
    const auto& c = un.net.config();
    for (std::size_t v : {c.in_channels, c.depth, c.filters, c.kernel, c.pool, c.segment_length, c.batch_size,
                          c.max_epochs, c.patience})
      cfg.put<std::uint32_t>(static_cast<std::uint32_t>(v));
    cfg.put<std::uint64_t>(c.seed);
    cfg.put<double>(c.learning_rate);
    for (double v : un.norm.mean) cfg.put<double>(v);
    for (double v : un.norm.std) cfg.put<double>(v);
    for (const auto& l : un.net.layers()) {
      blocks.push_back(l.weight);
      blocks.push_back(l.bias);
    }
  }
  io::ByteWriter w;
  w.put_bytes(std::string_view(kCheckpointMagic, 4));
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(kind));
  const std::string cfg_bytes = cfg.finish();
  // The cfg block's own checksum is dropped; the file checksum covers it.
  w.put_string(std::string_view(cfg_bytes).substr(0, cfg_bytes.size() - 4));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) detail::put_block(w, b);
  return w.finish();
}

inline AnyModel decode_checkpoint(std::string_view bytes, const std::string& what = "checkpoint") {
  io::ByteReader r(bytes, what);
  if (r.get_bytes(4) != std::string_view(kCheckpointMagic, 4))
    throw FormatError(what + ": not a checkpoint (bad magic)");
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion)
    throw FormatError(what + ": unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  const auto kind = static_cast<ModelKind>(r.get<std::uint8_t>());
  std::string cfg_bytes = r.get_string();
  // Re-append a checksum so the cfg block can be parsed with the same reader.
  cfg_bytes += std::string(4, '\0');
  {
    const auto h = io::ByteWriter::fnv1a(std::string_view(cfg_bytes).substr(0, cfg_bytes.size() - 4));
    std::memcpy(cfg_bytes.data() + cfg_bytes.size() - 4, &h, 4);
  }
  io::ByteReader cfg(cfg_bytes, what + " cfg block");
  const auto n_blocks = r.get<std::uint32_t>();

  AnyModel out;
  switch (kind) {
    case ModelKind::LogReg: {
      LogisticModel m;
      const auto nf = cfg.get<std::uint32_t>();
      m.iterations = cfg.get<std::uint32_t>();
      m.final_grad_norm = cfg.get<double>();
      if (n_blocks != 2) throw FormatError(what + ": logreg checkpoint needs 2 parameter blocks");
      m.weights = detail::get_block(r, nf, "weights");
      m.intercept = detail::get_block(r, 1, "intercept")[0];
      out = std::move(m);
      break;
    }
    case ModelKind::Forest: {
      ForestModel m;
      m.n_features = cfg.get<std::uint32_t>();
      const auto nt = cfg.get<std::uint32_t>();
      m.balanced_subsample = cfg.get<std::uint8_t>() != 0;
      m.seed = cfg.get<std::uint64_t>();
      if (n_blocks != nt) throw FormatError(what + ": tree count does not match parameter blocks");
      m.trees.resize(nt);
      for (auto& t : m.trees) {
        const auto b = detail::get_block(r);
        if (b.size() % 5 != 0 || b.empty()) throw FormatError(what + ": malformed tree block");
        for (std::size_t i = 0; i < b.size(); i += 5) {
          TreeNode n;
          n.feature = static_cast<std::int32_t>(b[i]);
          n.threshold = b[i + 1];
          n.left = static_cast<std::uint32_t>(b[i + 2]);
          n.right = static_cast<std::uint32_t>(b[i + 3]);
          n.prob = b[i + 4];
          const std::size_t count = b.size() / 5;
          if (n.feature >= static_cast<std::int32_t>(m.n_features) ||
              (!n.is_leaf() && (n.left >= count || n.right >= count || n.left <= i / 5 || n.right <= i / 5)))
            throw FormatError(what + ": tree node references out of range");
          t.nodes.push_back(n);
        }
      }
      out = std::move(m);
      break;
    }
    case ModelKind::UNet: {
      UNetConfig c;
      std::size_t* fields[] = {&c.in_channels, &c.depth,      &c.filters,    &c.kernel,  &c.pool,
                               &c.segment_length, &c.batch_size, &c.max_epochs, &c.patience};
      for (auto* f : fields) *f = cfg.get<std::uint32_t>();
      c.seed = cfg.get<std::uint64_t>();
      c.learning_rate = cfg.get<double>();
      UNetModel m;
      for (auto& v : m.norm.mean) v = cfg.get<double>();
      for (auto& v : m.norm.std) v = cfg.get<double>();
      try {
        m.net = UNet(c);
      } catch (const ConfigError& e) {
        throw FormatError(what + ": invalid U-Net config (" + e.what() + ")");
      }
      if (n_blocks != 2 * m.net.layers().size()) throw FormatError(what + ": U-Net layer count mismatch");
      for (auto& l : m.net.layers()) {
        l.weight = detail::get_block(r, l.weight.size(), "conv weight");
        l.bias = detail::get_block(r, l.bias.size(), "conv bias");
      }
      out = std::move(m);
      break;
    }
    default:
      throw FormatError(what + ": unknown model kind " + std::to_string(static_cast<int>(kind)));
  }
  if (!r.at_end()) throw FormatError(what + ": trailing bytes after parameter blocks");
  return out;
}

inline void checkpoint_save(const AnyModel& m, const std::string& path) { io::write_file(path, encode_checkpoint(m)); }

inline AnyModel checkpoint_load(const std::string& path) { return decode_checkpoint(io::read_file(path), path); }

}  // namespace buzzdet::models
