#include "fedhin/wire.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <iterator>
#include <ostream>

#include "fedhin/error.hpp"

namespace fedhin {
namespace {

static_assert(std::endian::native == std::endian::little,
              "wire format assumes a little-endian host");

constexpr std::string_view kUpdateMagic = "FHINUPD1";
constexpr std::string_view kDecisionMagic = "FHINDSP1";
constexpr std::string_view kCheckpointMagic = "FHINCKP1";
constexpr std::string_view kPreferenceMagic = "FHINPRF1";

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void bytes(std::string_view s) { out_.append(s); }
  void manifest(const ShapeManifest& m) {
    put<std::uint32_t>(static_cast<std::uint32_t>(m.size()));
    for (const auto& t : m) {
      put<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
      bytes(t.name);
      put<std::uint64_t>(t.rows);
      put<std::uint64_t>(t.cols);
    }
  }
  void payload(std::span<const double> v) {
    put<std::uint64_t>(v.size());
    out_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void magic(std::string_view expected) {
    if (bytes(expected.size()) != expected) {
      throw Error(ErrorKind::io, "unexpected magic, not a " +
                                     std::string(expected) + " stream");
    }
  }
  ShapeManifest manifest() {
    ShapeManifest m(get<std::uint32_t>());
    for (auto& t : m) {
      t.name = std::string(bytes(get<std::uint32_t>()));
      t.rows = get<std::uint64_t>();
      t.cols = get<std::uint64_t>();
    }
    return m;
  }
  FlatVector payload(const ShapeManifest& m) {
    const auto n = get<std::uint64_t>();
    if (n != total_size(m)) {
      throw Error(ErrorKind::shape, "payload length " + std::to_string(n) +
                                        " disagrees with its manifest");
    }
    if (n > (in_.size() - pos_) / sizeof(double)) {
      throw Error(ErrorKind::io, "truncated stream");
    }
    auto raw = bytes(n * sizeof(double));
    FlatVector v(n);
    std::memcpy(v.data(), raw.data(), raw.size());
    return v;
  }
  void finish() const {
    if (pos_ != in_.size()) {
      throw Error(ErrorKind::io, "trailing bytes after message");
    }
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw Error(ErrorKind::io, "truncated stream");
    }
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

std::string slurp(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), {});
}

ShapeManifest preference_manifest(const ModelParams& params) {
  return {{"preference", static_cast<std::size_t>(params.preference.rows()),
           static_cast<std::size_t>(params.preference.cols())}};
}

}  // namespace

std::string encode_update(const ClientUpdate& update,
                          const ShapeManifest& manifest) {
  if (update.weights.size() != total_size(manifest)) {
    throw Error(ErrorKind::shape, "update does not match its manifest");
  }
  Writer w;
  w.bytes(kUpdateMagic);
  w.put<std::uint32_t>(update.client_id);
  w.put<std::uint64_t>(update.version);
  w.manifest(manifest);
  w.payload(update.weights);
  return w.take();
}

std::pair<ClientUpdate, ShapeManifest> decode_update(std::string_view bytes) {
  Reader r(bytes);
  r.magic(kUpdateMagic);
  ClientUpdate u;
  u.client_id = r.get<std::uint32_t>();
  u.version = r.get<std::uint64_t>();
  auto m = r.manifest();
  u.weights = r.payload(m);
  r.finish();
  return {std::move(u), std::move(m)};
}

std::string encode_decision(const DispatchDecision& decision,
                            const ShapeManifest& manifest) {
  if (decision.payload.size() != total_size(manifest)) {
    throw Error(ErrorKind::shape, "decision does not match its manifest");
  }
  Writer w;
  w.bytes(kDecisionMagic);
  w.put<std::uint8_t>(decision.mode == DispatchMode::broadcast ? 1 : 0);
  w.put<std::uint32_t>(decision.target);
  w.manifest(manifest);
  w.payload(decision.payload);
  return w.take();
}

std::pair<DispatchDecision, ShapeManifest> decode_decision(
    std::string_view bytes) {
  Reader r(bytes);
  r.magic(kDecisionMagic);
  DispatchDecision d;
  const auto mode = r.get<std::uint8_t>();
  if (mode > 1) throw Error(ErrorKind::io, "invalid dispatch mode byte");
  d.mode = mode ? DispatchMode::broadcast : DispatchMode::targeted;
  d.target = r.get<std::uint32_t>();
  auto m = r.manifest();
  d.payload = r.payload(m);
  r.finish();
  return {std::move(d), std::move(m)};
}

void save_checkpoint(std::ostream& out, const ModelParams& params) {
  Writer w;
  w.bytes(kCheckpointMagic);
  w.manifest(params.shared_manifest());
  w.payload(params.shared_flat());
  auto s = w.take();
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw Error(ErrorKind::io, "failed to write checkpoint");
}

void load_checkpoint(std::istream& in, ModelParams& params) {
  const auto data = slurp(in);
  Reader r(data);
  r.magic(kCheckpointMagic);
  auto m = r.manifest();
  if (m != params.shared_manifest()) {
    throw Error(ErrorKind::shape,
                "checkpoint shape manifest does not match the model");
  }
  auto flat = r.payload(m);
  r.finish();
  params.set_shared_flat(flat);
}

void save_preferences(std::ostream& out, const ModelParams& params) {
  Writer w;
  w.bytes(kPreferenceMagic);
  w.manifest(preference_manifest(params));
  w.payload({params.preference.data(),
             static_cast<std::size_t>(params.preference.size())});
  auto s = w.take();
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw Error(ErrorKind::io, "failed to write preferences");
}

void load_preferences(std::istream& in, ModelParams& params) {
  const auto data = slurp(in);
  Reader r(data);
  r.magic(kPreferenceMagic);
  auto m = r.manifest();
  if (m != preference_manifest(params)) {
    throw Error(ErrorKind::shape,
                "preference manifest does not match the model");
  }
  auto flat = r.payload(m);
  r.finish();
  std::memcpy(params.preference.data(), flat.data(), flat.size() * sizeof(double));
}

}  // namespace fedhin
