#include "fade/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <map>

#include "fade/errors.hpp"

namespace fade {

namespace {

constexpr std::array<char, 4> kMagic{'F', 'A', 'D', 'E'};
// Anything larger is treated as corruption rather than allocated.
constexpr std::uint64_t kMaxName = 1u << 16;
constexpr std::uint64_t kMaxEntries = 1ull << 32;

template <typename UInt>
void put(std::ostream& out, UInt v) {
  std::array<char, sizeof(UInt)> bytes{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
bool get(std::istream& in, UInt& v) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) return false;
  v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(bytes[i]) << (8 * i);
  return true;
}

void add_affine(NamedTensors& t, const std::string& prefix, const Affine& a) {
  t.emplace_back(prefix + ".weight", a.weight.value());
  t.emplace_back(prefix + ".bias", a.bias.value());
}

void add_encoder(NamedTensors& t, const EncoderParams& e) {
  for (std::size_t l = 0; l < e.weights.size(); ++l) {
    t.emplace_back("encoder.w" + std::to_string(l), e.weights[l].value());
  }
}

using TensorMap = std::map<std::string, const Matrix*>;

TensorMap index(const NamedTensors& t) {
  TensorMap m;
  for (const auto& [name, value] : t) {
    if (!m.emplace(name, &value).second) throw CorruptFileError("duplicate tensor " + name);
  }
  return m;
}

const Matrix& need(const TensorMap& m, const std::string& name) {
  auto it = m.find(name);
  if (it == m.end()) throw CorruptFileError("checkpoint lacks tensor " + name);
  return *it->second;
}

EncoderParams encoder_from(const TensorMap& m, Pooling pooling) {
  EncoderParams e;
  e.pooling = pooling;
  for (int l = 0; m.count("encoder.w" + std::to_string(l)); ++l) {
    const Matrix& w = *m.at("encoder.w" + std::to_string(l));
    if (!e.weights.empty() && e.weights.back().cols() != w.rows()) {
      throw CorruptFileError("encoder layer " + std::to_string(l) + " does not chain");
    }
    e.weights.push_back(ad::parameter(w));
  }
  if (e.weights.empty()) throw CorruptFileError("checkpoint lacks encoder weights");
  return e;
}

Affine affine_from(const TensorMap& m, const std::string& prefix, Eigen::Index in) {
  const Matrix& w = need(m, prefix + ".weight");
  const Matrix& b = need(m, prefix + ".bias");
  if (w.rows() != in || b.rows() != 1 || b.cols() != w.cols()) {
    throw CorruptFileError("tensor shapes of " + prefix + " do not chain");
  }
  return {ad::parameter(w), ad::parameter(b)};
}

}  // namespace

void write_tensors(const NamedTensors& tensors, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  for (const auto& [name, m] : tensors) {
    put<std::uint64_t>(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(m(i, j)));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

NamedTensors read_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) throw CorruptFileError(path.string() + ": bad magic");
  std::uint32_t version = 0;
  if (!get(in, version)) throw CorruptFileError(path.string() + ": truncated header");
  if (version != kCheckpointVersion) {
    throw CorruptFileError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  NamedTensors out;
  std::uint64_t name_len = 0;
  while (get(in, name_len)) {
    if (name_len == 0 || name_len > kMaxName) throw CorruptFileError(path.string() + ": bad tensor name length");
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    std::uint64_t rows = 0, cols = 0;
    if (in.gcount() != static_cast<std::streamsize>(name_len) || !get(in, rows) || !get(in, cols)) {
      throw CorruptFileError(path.string() + ": truncated tensor record");
    }
    if (cols != 0 && rows > kMaxEntries / cols) {
      throw CorruptFileError(path.string() + ": implausible tensor shape for " + name);
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::uint64_t bits = 0;
        if (!get(in, bits)) throw CorruptFileError(path.string() + ": truncated data of " + name);
        m(i, j) = std::bit_cast<double>(bits);
      }
    }
    out.emplace_back(std::move(name), std::move(m));
  }
  if (in.gcount() != 0) throw CorruptFileError(path.string() + ": trailing bytes");
  return out;
}

NamedTensors to_tensors(const TargetPredictor& p) {
  NamedTensors t;
  add_encoder(t, p.encoder);
  add_affine(t, "classifier", p.classifier);
  add_affine(t, "projection.0", p.proj_hidden);
  add_affine(t, "projection.1", p.proj_out);
  return t;
}

NamedTensors to_tensors(const EventOnlyPredictor& p) {
  NamedTensors t;
  add_encoder(t, p.encoder);
  add_affine(t, "classifier", p.classifier);
  return t;
}

TargetPredictor target_from_tensors(const NamedTensors& t, Pooling pooling) {
  const auto m = index(t);
  TargetPredictor p;
  p.encoder = encoder_from(m, pooling);
  const auto h = p.encoder.weights.back().cols();
  p.classifier = affine_from(m, "classifier", h);
  p.proj_hidden = affine_from(m, "projection.0", h);
  p.proj_out = affine_from(m, "projection.1", p.proj_hidden.weight.cols());
  return p;
}

EventOnlyPredictor event_only_from_tensors(const NamedTensors& t, Pooling pooling) {
  const auto m = index(t);
  if (m.count("projection.0.weight")) throw CorruptFileError("checkpoint holds a target predictor");
  EventOnlyPredictor p;
  p.encoder = encoder_from(m, pooling);
  p.classifier = affine_from(m, "classifier", p.encoder.weights.back().cols());
  return p;
}

void save_checkpoint(const TargetPredictor& p, const std::filesystem::path& path) {
  write_tensors(to_tensors(p), path);
}

void save_checkpoint(const EventOnlyPredictor& p, const std::filesystem::path& path) {
  write_tensors(to_tensors(p), path);
}

TargetPredictor load_target_checkpoint(const std::filesystem::path& path, Pooling pooling) {
  return target_from_tensors(read_tensors(path), pooling);
}

EventOnlyPredictor load_event_only_checkpoint(const std::filesystem::path& path, Pooling pooling) {
  return event_only_from_tensors(read_tensors(path), pooling);
}

}  // namespace fade
