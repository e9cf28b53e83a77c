#include "gdse/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <zlib.h>

#include "gdse/config.hpp"
#include "gdse/errors.hpp"

namespace gdse {

namespace {

constexpr char kMagic[8] = {'G', 'D', 'S', 'E', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename T>
  void pod(T v) {
    bytes(&v, sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    bytes(s.data(), s.size());
  }
  std::vector<char>& buffer() { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<char>& buf, std::size_t end) : buf_(buf), end_(end) {}
  void bytes(void* p, std::size_t n) {
    if (n > end_ - pos_) throw CorruptCheckpointError("checkpoint truncated");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > end_ - pos_) throw CorruptCheckpointError("checkpoint truncated");
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == end_; }

 private:
  const std::vector<char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t checksum(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1U << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_params(Writer& w, const std::vector<const nn::Param*>& params) {
  w.pod<std::uint64_t>(params.size());
  for (const auto* p : params) {
    w.str(p->name);
    w.pod<std::uint64_t>(p->value.size());
    w.bytes(p->value.data(), p->value.size() * sizeof(double));
  }
}

void read_params(Reader& r, const std::vector<nn::Param*>& params, const std::string& which) {
  const auto n = r.pod<std::uint64_t>();
  if (n != params.size())
    throw ConfigMismatchError(which + ": parameter count differs from the configured network");
  for (auto* p : params) {
    const std::string name = r.str();
    if (name != p->name) throw ConfigMismatchError(which + ": expected parameter '" + p->name + "', found '" + name + "'");
    const auto len = r.pod<std::uint64_t>();
    if (len != p->value.size()) throw ConfigMismatchError(which + ": size mismatch for '" + name + "'");
    r.bytes(p->value.data(), len * sizeof(double));
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model, const CheckpointMeta& meta) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.pod<std::uint32_t>(kCheckpointVersion);
  const Json header{{"net", to_json(meta.net)},
                    {"spectral", to_json(meta.spectral)},
                    {"schedule", to_json(meta.schedule)},
                    {"sample_rate", meta.sample_rate},
                    {"step", meta.step}};
  w.str(header.dump());
  write_params(w, model.cmen.params());
  write_params(w, model.denoiser.params());
  auto& buf = w.buffer();
  const std::uint32_t crc = checksum(buf.data(), buf.size());
  w.pod<std::uint32_t>(crc);

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint not found: " + path.string());
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof kMagic + 8 || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
    throw CorruptCheckpointError(path.string() + ": not a checkpoint file or truncated");

  Reader r(buf, buf.size() - 4);
  char magic[sizeof kMagic];
  r.bytes(magic, sizeof magic);
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw VersionMismatchError(path.string() + ": format version " + std::to_string(version) + ", expected " +
                               std::to_string(kCheckpointVersion));
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
  if (stored_crc != checksum(buf.data(), buf.size() - 4))
    throw CorruptCheckpointError(path.string() + ": checksum mismatch (truncated or corrupted)");

  LoadedCheckpoint out;
  try {
    const Json header = Json::parse(r.str());
    out.meta.net = net_from_json(header.at("net"));
    out.meta.spectral = spectral_from_json(header.at("spectral"));
    out.meta.schedule = schedule_from_json(header.at("schedule"));
    out.meta.sample_rate = header.at("sample_rate").get<int>();
    out.meta.step = header.at("step").get<std::int64_t>();
  } catch (const Json::exception& e) {
    throw CorruptCheckpointError(path.string() + ": bad metadata (" + e.what() + ")");
  } catch (const ConfigError& e) {
    throw CorruptCheckpointError(path.string() + ": bad metadata (" + e.what() + ")");
  }
  out.meta.net.validate();
  out.model = Model(out.meta.net, out.meta.schedule.steps, 0);
  read_params(r, out.model.cmen.params(), "cmen");
  read_params(r, out.model.denoiser.params(), "denoiser");
  if (!r.done()) throw CorruptCheckpointError(path.string() + ": trailing bytes");
  return out;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const SpectralConfig& spectral,
                                 const ScheduleSettings& schedule, bool allow_mismatch) {
  LoadedCheckpoint ck = load_checkpoint(path);
  if (!allow_mismatch) {
    if (!(ck.meta.spectral == spectral))
      throw ConfigMismatchError(path.string() + ": spectral config differs from the requested run (stored " +
                                to_json(ck.meta.spectral).dump() + ")");
    if (!(ck.meta.schedule == schedule))
      throw ConfigMismatchError(path.string() + ": schedule differs from the requested run (stored " +
                                to_json(ck.meta.schedule).dump() + ")");
  }
  return ck;
}

}  // namespace gdse
