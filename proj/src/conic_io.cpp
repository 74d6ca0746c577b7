#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "gasnet/conic.hpp"
#include "gasnet/errors.hpp"

namespace gasnet {

// Format:
//   conic-program 1
//   variables <n> equalities <m> nonzeros <nnz> cones <q>
//   offset <value>
//   c <count>          followed by <count> lines "index value"
//   A                  followed by <nnz> lines "row col value"
//   b <count>          followed by <count> lines "index value"
//   cones              followed by <q> lines "type dim"
// Only nonzero entries of c and b are listed.

void write_program(std::ostream& out, const ConicProgram& p) {
  p.check();
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  out << "conic-program 1\n";
  out << "variables " << p.num_variables() << " equalities " << p.num_equalities()
      << " nonzeros " << p.A.nonZeros() << " cones " << p.cones.size() << "\n";
  out << "offset " << p.offset << "\n";

  auto write_vector = [&](const char* tag, const Eigen::VectorXd& v) {
    int count = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) count += v[i] != 0.0;
    out << tag << " " << count << "\n";
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v[i] != 0.0) out << i << " " << v[i] << "\n";
  };
  write_vector("c", p.c);
  out << "A\n";
  for (int j = 0; j < p.A.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, j); it; ++it)
      out << it.row() << " " << it.col() << " " << it.value() << "\n";
  write_vector("b", p.b);
  out << "cones\n";
  for (const auto& cone : p.cones) out << to_string(cone.type) << " " << cone.dim << "\n";
  out.precision(old_precision);
}

namespace {

void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word)
    throw ParseError("program file: expected '" + word + "', found '" + got + "'");
}

template <class T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw ParseError(std::string("program file: cannot read ") + what);
  return v;
}

ConeType cone_type_from_string(const std::string& s) {
  if (s == "free") return ConeType::free;
  if (s == "nonnegative") return ConeType::nonnegative;
  if (s == "second_order") return ConeType::second_order;
  throw ParseError("program file: unknown cone type '" + s + "'");
}

}  // namespace

ConicProgram read_program(std::istream& in) {
  expect(in, "conic-program");
  if (read_value<int>(in, "version") != 1) throw ParseError("program file: unsupported version");
  expect(in, "variables");
  const int n = read_value<int>(in, "variable count");
  expect(in, "equalities");
  const int m = read_value<int>(in, "equality count");
  expect(in, "nonzeros");
  const long nnz = read_value<long>(in, "nonzero count");
  expect(in, "cones");
  const int q = read_value<int>(in, "cone count");
  if (n < 0 || m < 0 || nnz < 0 || q < 0) throw ParseError("program file: negative count");

  ConicProgram p;
  expect(in, "offset");
  p.offset = read_value<double>(in, "offset");

  auto read_vector = [&](const char* tag, int size) {
    expect(in, tag);
    const int count = read_value<int>(in, "entry count");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
    for (int k = 0; k < count; ++k) {
      const int i = read_value<int>(in, "index");
      const double x = read_value<double>(in, "value");
      if (i < 0 || i >= size) throw ParseError(std::string("program file: ") + tag + " index out of range");
      v[i] = x;
    }
    return v;
  };
  p.c = read_vector("c", n);

  expect(in, "A");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(nnz);
  for (long k = 0; k < nnz; ++k) {
    const int i = read_value<int>(in, "row");
    const int j = read_value<int>(in, "column");
    const double x = read_value<double>(in, "value");
    if (i < 0 || i >= m || j < 0 || j >= n) throw ParseError("program file: A entry out of range");
    trips.emplace_back(i, j, x);
  }
  p.A.resize(m, n);
  p.A.setFromTriplets(trips.begin(), trips.end());
  p.A.makeCompressed();

  p.b = read_vector("b", m);

  expect(in, "cones");
  for (int k = 0; k < q; ++k) {
    const auto type = cone_type_from_string(read_value<std::string>(in, "cone type"));
    const int dim = read_value<int>(in, "cone dimension");
    p.cones.push_back({type, dim});
  }
  p.check();
  return p;
}

}  // namespace gasnet
