#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "meg/quadmeas.hpp"

namespace meg {

namespace {

constexpr char kMagic[] = "SPECMEG-QMI v1\n";

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64(std::ofstream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_block(std::ofstream& out, const double* data, Index count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

class Reader {
 public:
  Reader(std::ifstream& in, const std::string& path) : in_(in), path_(path) {}

  std::uint64_t u64() {
    std::uint64_t v = 0;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v = 0.0;
    raw(&v, sizeof v);
    return v;
  }
  void block(double* data, Index count) {
    raw(data, static_cast<std::size_t>(count) * sizeof(double));
  }

 private:
  void raw(void* dst, std::size_t bytes) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    if (!in_) throw IoError(path_ + ": truncated instance file");
  }
  std::ifstream& in_;
  const std::string& path_;
};

}  // namespace

void save_instance(const QuadMeasInstance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(kMagic, sizeof kMagic - 1);
  write_u64(out, static_cast<std::uint64_t>(inst.n));
  write_u64(out, static_cast<std::uint64_t>(inst.r_true));
  write_u64(out, static_cast<std::uint64_t>(inst.m));
  write_u64(out, inst.seed);
  write_f64(out, inst.kappa);
  write_f64(out, inst.tau);
  write_block(out, inst.v.data(), inst.v.size());
  write_block(out, inst.a.data(), inst.a.size());
  write_block(out, inst.b.data(), inst.b.size());
  write_block(out, inst.y0.data(), inst.y0.size());
  write_block(out, inst.y.data(), inst.y.size());
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

QuadMeasInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  char magic[sizeof kMagic - 1];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw IoError(path + ": not a SPECMEG-QMI v1 file");
  }
  Reader rd(in, path);
  QuadMeasInstance inst;
  inst.n = static_cast<Index>(rd.u64());
  inst.r_true = static_cast<Index>(rd.u64());
  inst.m = static_cast<Index>(rd.u64());
  inst.seed = rd.u64();
  inst.kappa = rd.f64();
  inst.tau = rd.f64();
  if (inst.n < 2 || inst.r_true < 1 || inst.r_true >= inst.n || inst.m < 1 ||
      inst.n > (Index{1} << 20) || inst.m > (Index{1} << 28)) {
    throw IoError(path + ": implausible instance header");
  }
  inst.v.resize(inst.n, inst.r_true);
  inst.a.resize(inst.m, inst.n);
  inst.b.resize(inst.m, inst.n);
  inst.y0.resize(inst.m);
  inst.y.resize(inst.m);
  rd.block(inst.v.data(), inst.v.size());
  rd.block(inst.a.data(), inst.a.size());
  rd.block(inst.b.data(), inst.b.size());
  rd.block(inst.y0.data(), inst.y0.size());
  rd.block(inst.y.data(), inst.y.size());
  return inst;
}

}  // namespace meg
