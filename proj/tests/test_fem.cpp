#include "support.hpp"
#include "strb/fem.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>

using namespace strb;

namespace {

std::shared_ptr<const Mesh> box(std::array<double, 3> l, std::array<int, 3> d, std::vector<TagRule> rules = {}) {
  return std::make_shared<const Mesh>(build_box_mesh(l, d, rules));
}

std::shared_ptr<const FESpace> space(std::shared_ptr<const Mesh> m, Element e, int comps, bool constrain = true) {
  return std::make_shared<const FESpace>(std::move(m), e, comps, constrain);
}

// Nodal interpolant of a function on all DOFs of a scalar space.
Vector interpolate(const FESpace& s, const std::function<double(const Point&)>& f) {
  Vector v(s.num_dofs());
  for (Index n = 0; n < s.num_nodes(); ++n) v[n] = f(s.node(static_cast<int>(n)));
  return v;
}

}  // namespace

TEST_CASE("box mesh construction") {
  Mesh unit = build_box_mesh({1, 1, 1}, {1, 1, 1}, {});
  CHECK(unit.cells.size() == 1);
  CHECK(unit.vertices.size() == 8);
  CHECK(unit.facets.size() == 6);
  CHECK_NOTHROW(unit.validate());
  CHECK(unit.cell_volume(0) == doctest::Approx(1.0));

  Mesh slab = build_box_mesh({4, 1.5, 0.2}, {16, 6, 2}, {});
  CHECK(slab.cells.size() == 192);
  CHECK_NOTHROW(slab.validate());
  double vol = 0;
  for (int c = 0; c < 192; ++c) vol += slab.cell_volume(c);
  CHECK(vol == doctest::Approx(4 * 1.5 * 0.2).epsilon(1e-12));

  CHECK_THROWS_AS(build_box_mesh({-1, 1, 1}, {1, 1, 1}, {}), InvalidArgument);
  CHECK_THROWS_AS(build_box_mesh({1, 1, 1}, {0, 1, 1}, {}), InvalidArgument);
}

TEST_CASE("tag rules and mesh validation") {
  Mesh m = build_box_mesh({2, 1, 1}, {2, 1, 1},
                          {on_plane(0, 0.0, BoundaryTag::dirichlet), on_plane(0, 2.0, BoundaryTag::neumann)});
  int d = 0, n = 0, z = 0;
  for (const auto& f : m.facets) {
    if (f.tag == BoundaryTag::dirichlet) ++d;
    else if (f.tag == BoundaryTag::neumann) ++n;
    else if (f.tag == BoundaryTag::neumann_zero) ++z;
  }
  CHECK(d == 1);
  CHECK(n == 1);
  CHECK(z == 8);
  Point nrm = m.facet_normal(0, 0);
  CHECK(nrm[0] == doctest::Approx(-1.0));

  Mesh missing = m;
  missing.facets.pop_back();
  CHECK_THROWS_AS(missing.validate(), InvalidArgument);
  Mesh twice = m;
  twice.facets.push_back(m.facets.front());
  CHECK_THROWS_AS(twice.validate(), InvalidArgument);
  Mesh inverted = m;
  std::swap(inverted.cells[0][0], inverted.cells[0][1]);
  CHECK_THROWS_AS(inverted.validate(), InvalidArgument);
}

TEST_CASE("ASCII mesh round trip") {
  Mesh m = build_box_mesh({1, 2, 3}, {2, 2, 1}, {on_plane(2, 0.0, BoundaryTag::dirichlet_nopen)});
  auto path = std::filesystem::temp_directory_path() / "strb_mesh.txt";
  write_mesh(path, m);
  Mesh back = read_mesh(path);
  CHECK(back.vertices == m.vertices);
  CHECK(back.cells == m.cells);
  REQUIRE(back.facets.size() == m.facets.size());
  for (std::size_t i = 0; i < m.facets.size(); ++i) CHECK(back.facets[i].tag == m.facets[i].tag);
  std::filesystem::remove(path);
}

TEST_CASE("Q2 node numbering shares nodes across cells") {
  auto m = box({1, 1, 1}, {2, 3, 1});
  FESpace s(m, Element::Q2, 1, false);
  CHECK(s.num_nodes() == 5 * 7 * 3);
  FESpace v(m, Element::Q2, 3, false);
  CHECK(v.num_dofs() == 3 * 5 * 7 * 3);
  FESpace p(m, Element::P0, 1);
  CHECK(p.num_dofs() == 6);
}

TEST_CASE("mass matrix sums to the domain volume") {
  for (Element e : {Element::Q1, Element::Q2}) {
    auto s = space(box({1, 1, 1}, {1, 1, 1}), e, 1, false);
    Assembler a(s);
    Matrix m = a.mass();
    CHECK(std::abs(m.sum() - 1.0) <= 1e-12);
  }
  // distorted cell: sum equals the exact volume of the trilinear hexahedron
  auto mesh = std::make_shared<Mesh>(build_box_mesh({1, 1, 1}, {1, 1, 1}, {}));
  mesh->vertices[7] = {1.3, 1.2, 1.1};
  auto s = space(mesh, Element::Q1, 1, false);
  Assembler a(s);
  CHECK(std::abs(Matrix(a.mass()).sum() - mesh->cell_volume(0)) <= 1e-12);
}

TEST_CASE("mass integrates polynomials exactly") {
  auto s = space(box({2, 1, 1}, {2, 2, 2}), Element::Q1, 1, false);
  Assembler a(s);
  Vector x = interpolate(*s, [](const Point& p) { return p[0]; });
  CHECK(x.dot(a.mass() * x) == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("stiffness annihilates constants and is linear in the field") {
  for (Element e : {Element::Q1, Element::Q2}) {
    auto s = space(box({1, 2, 1}, {2, 1, 2}), e, 1, false);
    Assembler a(s);
    const Index nq = a.num_quadrature_points();
    std::vector<double> one(static_cast<std::size_t>(nq), 1.0), three(static_cast<std::size_t>(nq), 3.0);
    SparseMatrix k1 = a.stiffness(one);
    CHECK((k1 * Vector::Ones(s->num_dofs())).norm() <= 1e-12);
    Vector z1 = a.stiffness_nonzeros(one), z3 = a.stiffness_nonzeros(three);
    CHECK((z3 - 3.0 * z1).norm() <= 1e-13 * z3.norm());

    testing::Rng rng(21);
    std::vector<double> w1(static_cast<std::size_t>(nq)), w2(static_cast<std::size_t>(nq)), mix(static_cast<std::size_t>(nq));
    for (std::size_t q = 0; q < w1.size(); ++q) {
      w1[q] = rng.uniform(0.5, 2);
      w2[q] = rng.uniform(0.5, 2);
      mix[q] = 0.7 * w1[q] - 1.3 * w2[q];
    }
    Vector lhs = a.stiffness_nonzeros(mix);
    Vector rhs = 0.7 * a.stiffness_nonzeros(w1) - 1.3 * a.stiffness_nonzeros(w2);
    CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
    CHECK_THROWS_AS(a.stiffness_nonzeros(std::vector<double>(3, 1.0)), InvalidArgument);
  }
}

TEST_CASE("stiffness of a linear function gives the boundary flux") {
  // u = x on [0,2]x[0,1]x[0,1]: integral of grad u . grad u = volume
  auto s = space(box({2, 1, 1}, {3, 2, 2}), Element::Q2, 1, false);
  Assembler a(s);
  Vector x = interpolate(*s, [](const Point& p) { return p[0]; });
  std::vector<double> one(static_cast<std::size_t>(a.num_quadrature_points()), 1.0);
  CHECK(x.dot(a.stiffness(one) * x) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("vector spaces repeat the scalar blocks per component") {
  auto m = box({1, 1, 1}, {2, 1, 1});
  auto ss = space(m, Element::Q2, 1, false);
  auto vs = space(m, Element::Q2, 3, false);
  Assembler as(ss), av(vs);
  Matrix ms = as.mass(), mv = av.mass();
  for (Index i = 0; i < ss->num_dofs(); ++i)
    for (Index j = 0; j < ss->num_dofs(); ++j)
      for (int c = 0; c < 3; ++c) {
        CHECK(mv(3 * i + c, 3 * j + c) == ms(i, j));
        CHECK(mv(3 * i + c, 3 * j + (c + 1) % 3) == 0.0);
      }
}

TEST_CASE("sampled assembly equals full assembly on the sample") {
  auto s = space(box({1, 1, 1}, {3, 2, 2}, {on_plane(0, 0.0, BoundaryTag::dirichlet)}), Element::Q1, 1);
  Assembler a(s);
  PointField alpha = [](const Point& x) { return std::exp(x[0] + 0.5 * x[1] * x[2]); };
  std::vector<double> field(static_cast<std::size_t>(a.num_quadrature_points()));
  for (std::size_t q = 0; q < field.size(); ++q) field[q] = alpha(a.quadrature_points()[q]);
  const Vector full = a.stiffness_nonzeros(field);

  std::vector<Index> all(static_cast<std::size_t>(a.num_nonzeros()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
  CHECK(a.sampled_stiffness(all, alpha) == full);
  CHECK(a.sampled_mass(all) == a.mass_nonzeros());

  testing::Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Index> sample;
    for (int k = 0; k < 4; ++k) sample.push_back(rng.integer(0, static_cast<int>(a.num_nonzeros()) - 1));
    SampleStats stats;
    Vector v = a.sampled_stiffness(sample, alpha, &stats);
    for (std::size_t k = 0; k < sample.size(); ++k) CHECK(v[static_cast<Index>(k)] == full[sample[k]]);
    // adjacency oracle: cells whose scatter table reaches a sampled nonzero
    std::set<int> adjacent;
    for (int c = 0; c < s->num_cells(); ++c)
      for (Index z : a.pattern().cell_map(c))
        if (std::find(sample.begin(), sample.end(), z) != sample.end()) adjacent.insert(c);
    CHECK(stats.cells_touched <= static_cast<Index>(adjacent.size()));
    CHECK(stats.entries == 4);
  }
  CHECK_THROWS_AS(a.sampled_mass({a.num_nonzeros()}), InvalidArgument);
}

TEST_CASE("single mass entry on one cell") {
  auto s = space(box({1, 1, 1}, {1, 1, 1}), Element::Q1, 1, false);
  Assembler a(s);
  Matrix m = a.mass();
  auto [i, j] = a.pattern().entry(5);
  CHECK(a.sampled_mass({5})[0] == m(i, j));
  CHECK(m(0, 0) == doctest::Approx(1.0 / 27.0));
}

TEST_CASE("pattern is independent of the field") {
  auto s = space(box({1, 1, 1}, {2, 2, 2}), Element::Q1, 1);
  Assembler a(s);
  std::vector<double> f1(static_cast<std::size_t>(a.num_quadrature_points()), 1.0), f2 = f1;
  f2[3] = 0.0;
  SparseMatrix k1 = a.stiffness(f1), k2 = a.stiffness(f2);
  CHECK(k1.nonZeros() == k2.nonZeros());
  CHECK(std::equal(k1.innerIndexPtr(), k1.innerIndexPtr() + k1.nonZeros(), k2.innerIndexPtr()));
  CHECK(a.pattern().nonzeros_of(k1).size() == k1.nonZeros());
}

TEST_CASE("Dirichlet constraints follow the tags") {
  auto m = box({1, 1, 1}, {2, 2, 2},
               {on_plane(0, 0.0, BoundaryTag::dirichlet), on_plane(1, 0.0, BoundaryTag::dirichlet_zero),
                on_plane(2, 0.0, BoundaryTag::dirichlet_nopen)});
  FESpace s(m, Element::Q1, 1);
  for (Index n = 0; n < s.num_nodes(); ++n) {
    const Point& x = s.node(static_cast<int>(n));
    const auto c = s.constraint(n);
    if (x[0] == 0.0) CHECK(c == FESpace::Constraint::value);
    else if (x[1] == 0.0) CHECK(c == FESpace::Constraint::zero);
    else CHECK(c == FESpace::Constraint::free);
  }
  FESpace v(m, Element::Q2, 3);
  for (Index n = 0; n < v.num_nodes(); ++n) {
    const Point& x = v.node(static_cast<int>(n));
    if (x[0] == 0.0 || x[1] == 0.0) continue;
    for (int c = 0; c < 3; ++c) {
      const bool constrained = v.constraint(v.dof(static_cast<int>(n), c)) != FESpace::Constraint::free;
      CHECK(constrained == (x[2] == 0.0 && c == 2));
    }
  }
}

TEST_CASE("dirichlet_lifting") {
  auto m = box({2, 1, 1}, {2, 1, 1}, {on_plane(0, 0.0, BoundaryTag::dirichlet)});
  FESpace s(m, Element::Q1, 1);
  VectorField zero = [](const Point&, double, const Parameter&) { return std::array<double, 3>{0, 0, 0}; };
  VectorField five = [](const Point&, double, const Parameter&) { return std::array<double, 3>{5, 5, 5}; };
  CHECK(dirichlet_lifting(s, zero, 0.0, {}).norm() == 0.0);
  Vector l = dirichlet_lifting(s, five, 0.0, {});
  for (Index n = 0; n < s.num_nodes(); ++n) CHECK(l[n] == (s.node(static_cast<int>(n))[0] == 0.0 ? 5.0 : 0.0));
}

TEST_CASE("norm matrices") {
  auto s = space(box({1, 1, 1}, {2, 2, 1}, {on_plane(0, 0.0, BoundaryTag::dirichlet)}), Element::Q1, 1);
  Assembler a(s);
  NormMatrix l2 = norm_matrix(a, NormKind::L2);
  NormMatrix h1 = norm_matrix(a, NormKind::H1);
  CHECK(Matrix(l2.matrix()) == Matrix(a.mass()));
  std::vector<double> one(static_cast<std::size_t>(a.num_quadrature_points()), 1.0);
  CHECK((Matrix(h1.matrix()) - Matrix(a.mass()) - Matrix(a.stiffness(one))).norm() <= 1e-14);
  testing::Rng rng(23);
  for (int k = 0; k < 100; ++k) {
    Vector v = rng.vector(s->num_free());
    CHECK(v.dot(h1.matrix() * v) > 0);
  }
}

TEST_CASE("divergence of a linear velocity") {
  auto m = box({2, 1, 1}, {2, 1, 1});
  auto v = space(m, Element::Q2, 3, false);
  Assembler a(v);
  SparseMatrix b = a.divergence();
  CHECK(b.rows() == 2);
  Vector u = Vector::Zero(v->num_dofs());
  for (Index n = 0; n < v->num_nodes(); ++n) u[v->dof(static_cast<int>(n), 0)] = 1.0;
  CHECK((b * u).norm() <= 1e-13);
  for (Index n = 0; n < v->num_nodes(); ++n) u[v->dof(static_cast<int>(n), 0)] = v->node(static_cast<int>(n))[0];
  Vector div = b * u;
  CHECK(div[0] == doctest::Approx(1.0));
  CHECK(div[1] == doctest::Approx(1.0));
  CHECK(Matrix(a.cell_volumes()).diagonal().sum() == doctest::Approx(2.0));
}

TEST_CASE("boundary load integrates over the facet") {
  auto m = box({2, 1, 3}, {1, 1, 1}, {on_plane(0, 2.0, BoundaryTag::neumann)});
  auto s = space(m, Element::Q2, 1, false);
  Assembler a(s);
  auto facets = a.facets_with_tag(BoundaryTag::neumann);
  REQUIRE(facets.size() == 1);
  Vector l = a.local_boundary_load(facets[0], [](const Point&) { return std::array<double, 3>{2, 0, 0}; });
  CHECK(l.sum() == doctest::Approx(2.0 * 3.0));
  Vector f = a.local_load(0, [](const Point&) { return std::array<double, 3>{1, 0, 0}; });
  CHECK(f.sum() == doctest::Approx(6.0));
}
