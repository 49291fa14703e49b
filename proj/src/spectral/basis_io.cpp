#include <fstream>

#include "norm/binio.hpp"
#include "norm/error.hpp"
#include "norm/spectral/basis.hpp"

namespace norm {

namespace {
constexpr std::string_view kMagic{"NORMSB1\0", 8};
}

void save_basis(const SpectralBasis& basis, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  binio::write_magic(os, kMagic);
  binio::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(basis.kind()));
  binio::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(basis.nodes()));
  binio::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(basis.size()));
  binio::write_f64(os, {basis.values().data(), static_cast<std::size_t>(basis.values().size())});
  binio::write_f64(os, {basis.modes().data(), static_cast<std::size_t>(basis.modes().size())});
  binio::write_f64(os, {basis.pinv().data(), static_cast<std::size_t>(basis.pinv().size())});
  os.write(reinterpret_cast<const char*>(basis.source_id().data()), 32);
  // POD trailer: length of the centring mean (0 or n_x), then the values.
  if (basis.kind() == BasisKind::POD) {
    binio::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(basis.mean().size()));
    binio::write_f64(os, {basis.mean().data(), static_cast<std::size_t>(basis.mean().size())});
  }
  require(static_cast<bool>(os), ErrorKind::Io, "write failed for " + path.string());
}

SpectralBasis load_basis(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open " + path.string());
  binio::read_magic(is, kMagic, path.string());
  const auto kind_raw = binio::read_le<std::uint32_t>(is);
  require(kind_raw <= 2, ErrorKind::ParseError, "unknown basis kind " + std::to_string(kind_raw));
  const auto kind = static_cast<BasisKind>(kind_raw);
  const auto n = binio::read_le<std::uint64_t>(is);
  const auto d = binio::read_le<std::uint64_t>(is);
  require(n >= 1 && d >= 1 && d <= n && n < (1ull << 32), ErrorKind::ParseError, "implausible basis shape");
  const auto ni = static_cast<Eigen::Index>(n), di = static_cast<Eigen::Index>(d);
  Vector values(di);
  Matrix modes(ni, di), pinv(di, ni);
  binio::read_f64(is, {values.data(), d});
  binio::read_f64(is, {modes.data(), n * d});
  binio::read_f64(is, {pinv.data(), n * d});
  Digest id{};
  is.read(reinterpret_cast<char*>(id.data()), 32);
  require(static_cast<bool>(is), ErrorKind::ParseError, "truncated basis file");
  Vector mean;
  if (kind == BasisKind::POD) {
    const auto len = binio::read_le<std::uint64_t>(is);
    require(len == 0 || len == n, ErrorKind::ParseError, "bad POD mean length");
    mean.resize(static_cast<Eigen::Index>(len));
    binio::read_f64(is, {mean.data(), len});
  }
  return SpectralBasis(kind, std::move(modes), std::move(values), std::move(pinv), id, std::move(mean));
}

}  // namespace norm
