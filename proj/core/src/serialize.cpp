#include "nldpe/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nldpe {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::istringstream expect_line(std::istream& in, const std::string& tag) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("image: truncated, expected " + tag);
  std::istringstream ls(line);
  std::string got;
  ls >> got;
  if (got != tag) throw std::runtime_error("image: expected '" + tag + "', got '" + got + "'");
  return ls;
}

void write_qspec(std::ostream& os, const QuantSpec& q) {
  os << "qspec " << num(q.in_lo) << ' ' << num(q.in_hi) << ' ' << num(q.out_lo) << ' '
     << num(q.out_hi) << ' ' << q.n_bits << ' ' << to_string(q.encoding) << '\n';
}

QuantSpec read_qspec(std::istream& in) {
  auto ls = expect_line(in, "qspec");
  QuantSpec q;
  std::string enc;
  ls >> q.in_lo >> q.in_hi >> q.out_lo >> q.out_hi >> q.n_bits >> enc;
  q.encoding = encoding_from_string(enc);
  q.validate();
  return q;
}

}  // namespace

std::string compiled_to_text(const CompiledFunction& c) {
  std::ostringstream os;
  os << "compiled-function v1\n";
  os << "name " << (c.name.empty() ? "-" : c.name) << '\n';
  write_qspec(os, c.qspec);
  for (const auto& b : c.bits) {
    os << "bit " << b.bit_index << " intervals " << b.intervals.size() << '\n';
    for (const auto& iv : b.intervals) os << num(iv.lo) << ' ' << num(iv.hi) << '\n';
  }
  return os.str();
}

CompiledFunction compiled_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line != "compiled-function v1") throw std::runtime_error("image: not a compiled function");
  CompiledFunction c;
  auto ls = expect_line(in, "name");
  ls >> c.name;
  if (c.name == "-") c.name.clear();
  c.qspec = read_qspec(in);
  for (int i = 0; i < c.qspec.n_bits; ++i) {
    auto bl = expect_line(in, "bit");
    BitIntervalSet set;
    std::string tag;
    std::size_t count = 0;
    bl >> set.bit_index >> tag >> count;
    set.encoding = c.qspec.encoding;
    for (std::size_t k = 0; k < count; ++k) {
      Interval iv;
      if (!(in >> iv.lo >> iv.hi)) throw std::runtime_error("image: truncated intervals");
      set.intervals.push_back(iv);
    }
    std::getline(in, line);  // finish the row
    c.bits.push_back(std::move(set));
  }
  return c;
}

std::string unit_to_text(const AcamUnit& u) {
  std::ostringstream os;
  os << "acam-unit v1\n";
  os << "function " << (u.function.empty() ? "-" : u.function) << '\n';
  os << "image " << u.image_id << '\n';
  write_qspec(os, u.qspec);
  os << "transfer " << num(u.mapping.transfer.a) << ' ' << num(u.mapping.transfer.b) << ' '
     << num(u.mapping.transfer.c) << '\n';
  os << "window " << num(u.mapping.domain_lo) << ' ' << num(u.mapping.domain_hi) << ' '
     << num(u.mapping.th_lo) << ' ' << num(u.mapping.th_hi) << '\n';
  for (std::size_t a = 0; a < u.arrays.size(); ++a) {
    os << "array " << a << " rows " << u.arrays[a].rows.size() << '\n';
    for (const auto& row : u.arrays[a].rows) {
      const AcamCell& cell = row.cells[0];
      os << num(cell.lo_g) << ' ' << num(cell.hi_g) << ' ' << (row.enabled ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

AcamUnit unit_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line != "acam-unit v1") throw std::runtime_error("image: not an acam unit");
  AcamUnit u;
  auto fl = expect_line(in, "function");
  fl >> u.function;
  if (u.function == "-") u.function.clear();
  auto il = expect_line(in, "image");
  il >> u.image_id;
  u.qspec = read_qspec(in);
  auto tl = expect_line(in, "transfer");
  tl >> u.mapping.transfer.a >> u.mapping.transfer.b >> u.mapping.transfer.c;
  auto wl = expect_line(in, "window");
  wl >> u.mapping.domain_lo >> u.mapping.domain_hi >> u.mapping.th_lo >> u.mapping.th_hi;
  for (int a = 0; a < u.qspec.n_bits; ++a) {
    auto al = expect_line(in, "array");
    std::size_t idx = 0, rows = 0;
    std::string tag;
    al >> idx >> tag >> rows;
    AcamArray arr;
    arr.cols = 1;
    for (std::size_t r = 0; r < rows; ++r) {
      AcamRow row;
      row.cells.resize(1);
      int enabled = 0;
      if (!(in >> row.cells[0].lo_g >> row.cells[0].hi_g >> enabled))
        throw std::runtime_error("image: truncated acam rows");
      row.enabled = enabled != 0;
      row.cells[0].wildcard = false;
      arr.rows.push_back(row);
    }
    std::getline(in, line);
    u.arrays.push_back(std::move(arr));
  }
  return u;
}

std::string crossbar_to_text(const CrossbarImage& img) {
  std::ostringstream os;
  os << "crossbar v1\n";
  os << "shape " << img.rows << ' ' << img.cols << '\n';
  os << "scheme " << (img.scheme == SliceScheme::ASL ? "asl" : "dsl") << '\n';
  os << "wmax " << num(img.w_max) << " xmax " << num(img.x_max) << " bits_per_cell "
     << img.bits_per_cell << " identity " << (img.is_identity ? 1 : 0) << " image "
     << img.image_id << '\n';
  if (img.scheme == SliceScheme::DSL) write_qspec(os, img.wspec);
  os << "col_scale";
  for (double v : img.col_scale) os << ' ' << num(v);
  os << '\n';
  os << "planes " << img.planes.size() << '\n';
  for (const auto& p : img.planes) {
    for (std::size_t r = 0; r < p.rows; ++r) {
      for (std::size_t c = 0; c < p.cols; ++c) {
        if (c) os << ' ';
        os << num(p.at(r, c));
      }
      os << '\n';
    }
  }
  return os.str();
}

CrossbarImage crossbar_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line != "crossbar v1") throw std::runtime_error("image: not a crossbar");
  CrossbarImage img;
  auto sl = expect_line(in, "shape");
  sl >> img.rows >> img.cols;
  auto cl = expect_line(in, "scheme");
  std::string scheme;
  cl >> scheme;
  img.scheme = scheme == "asl" ? SliceScheme::ASL : SliceScheme::DSL;
  auto ml = expect_line(in, "wmax");
  std::string tag;
  int identity = 0;
  ml >> img.w_max >> tag >> img.x_max >> tag >> img.bits_per_cell >> tag >> identity >> tag >>
      img.image_id;
  img.is_identity = identity != 0;
  if (img.scheme == SliceScheme::DSL) img.wspec = read_qspec(in);
  auto csl = expect_line(in, "col_scale");
  img.col_scale.resize(img.cols);
  for (auto& v : img.col_scale) csl >> v;
  auto pl = expect_line(in, "planes");
  std::size_t planes = 0;
  pl >> planes;
  img.planes.assign(planes, Matrix(img.rows, img.cols));
  for (auto& p : img.planes)
    for (std::size_t r = 0; r < p.rows; ++r)
      for (std::size_t c = 0; c < p.cols; ++c)
        if (!(in >> p.at(r, c))) throw std::runtime_error("image: truncated planes");
  return img;
}

std::string faultmap_to_csv(const FaultMap& fm) {
  std::ostringstream os;
  os << "array,row,col,mode\n";
  for (const auto& e : fm.entries) {
    const std::uint32_t col = e.site.col != 0 ? e.site.col : e.site.element;
    os << e.site.array << ',' << e.site.row << ',' << col << ','
       << (e.mode == FaultMode::StuckLowG ? "low" : "high") << '\n';
  }
  return os.str();
}

FaultMap faultmap_from_csv(const std::string& text, std::uint64_t image_id,
                           bool acam_semantics) {
  FaultMap fm;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && line.rfind("array", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    std::istringstream ls(line);
    std::string field;
    FaultEntry e;
    e.site.image = image_id;
    std::getline(ls, field, ',');
    e.site.array = static_cast<std::uint32_t>(std::stoul(field));
    std::getline(ls, field, ',');
    e.site.row = static_cast<std::uint32_t>(std::stoul(field));
    std::getline(ls, field, ',');
    const auto col = static_cast<std::uint32_t>(std::stoul(field));
    if (acam_semantics) {
      e.site.col = 0;
      e.site.element = col;  // bound RRAM select for single-feature rows
    } else {
      e.site.col = col;
    }
    std::getline(ls, field, ',');
    if (field == "low" || field == "StuckLowG" || field == "0")
      e.mode = FaultMode::StuckLowG;
    else if (field == "high" || field == "StuckHighG" || field == "1")
      e.mode = FaultMode::StuckHighG;
    else
      throw std::runtime_error("faultmap: bad mode '" + field + "'");
    fm.entries.push_back(e);
  }
  return fm;
}

std::string row_counts_csv(const CompiledFunction& c) {
  std::ostringstream os;
  os << "bit,rows\n";
  for (const auto& b : c.bits) os << "bit_" << b.bit_index << ',' << b.intervals.size() << '\n';
  std::size_t total = 0;
  for (const auto& b : c.bits) total += b.intervals.size();
  os << "total," << total << '\n';
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace nldpe
