#include "lantern/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace lantern {
namespace {

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is, const std::string& path, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw EngineError(cat("checkpoint '", path, "': truncated ", what));
  return v;
}

}  // namespace

void save_checkpoint(const ParamStore& store, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw EngineError(cat("cannot open checkpoint for write: ", path));
  os.write(kCheckpointMagic, 4);
  write_pod(os, kCheckpointVersion);
  write_pod(os, static_cast<std::uint64_t>(store.count()));
  for (std::size_t h = 0; h < store.count(); ++h) {
    const ParamEntry& e = store.entry(h);
    write_pod(os, static_cast<std::uint64_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_pod(os, static_cast<std::uint64_t>(e.shape.size()));
    for (std::size_t d : e.shape) write_pod(os, static_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char*>(e.values.data()),
             static_cast<std::streamsize>(e.values.size() * sizeof(double)));
  }
  os.flush();
  if (!os) throw EngineError(cat("checkpoint write failed: ", path));
}

void load_checkpoint(ParamStore& store, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw EngineError(cat("cannot open checkpoint: ", path));
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw ValidationError(cat("checkpoint '", path, "': bad magic bytes"));
  const auto version = read_pod<std::uint32_t>(is, path, "version");
  if (version != kCheckpointVersion)
    throw ValidationError(cat("checkpoint '", path, "': unsupported version ",
                              version));
  const auto count = read_pod<std::uint64_t>(is, path, "entry count");
  if (count != store.count())
    throw ValidationError(cat("checkpoint '", path, "' has ", count,
                              " entries but the model expects ",
                              store.count()));
  std::vector<bool> seen(store.count(), false);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint64_t>(is, path, "name length");
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    if (!is) throw EngineError(cat("checkpoint '", path, "': truncated name"));
    if (!store.has(name))
      throw ValidationError(
          cat("checkpoint '", path, "': unknown entry '", name, "'"));
    const std::size_t h = store.handle(name);
    if (seen[h])
      throw ValidationError(
          cat("checkpoint '", path, "': duplicate entry '", name, "'"));
    seen[h] = true;
    ParamEntry& e = store.entry(h);
    const auto rank = read_pod<std::uint64_t>(is, path, "shape rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape)
      d = static_cast<std::size_t>(read_pod<std::uint64_t>(is, path, "dim"));
    if (shape != e.shape)
      throw ValidationError(cat("checkpoint '", path, "': entry '", name,
                                "' shape mismatch"));
    is.read(reinterpret_cast<char*>(e.values.data()),
            static_cast<std::streamsize>(e.values.size() * sizeof(double)));
    if (!is)
      throw EngineError(
          cat("checkpoint '", path, "': truncated values for '", name, "'"));
  }
}

}  // namespace lantern
