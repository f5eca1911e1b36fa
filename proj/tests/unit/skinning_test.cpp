#include <random>

#include <gtest/gtest.h>

#include "hdhuman/tracking/skinning.hpp"

using namespace hdhuman;
using namespace hdhuman::tracking;

namespace {

// Two-bone chain along +y with a tube around it.
KinematicTree two_bone() { return KinematicTree({-1, 0, 1}, {{0, 0, 0}, {0, 1, 0}, {0, 2, 0}}); }

Mesh tube() { return make_tube({{0, 0, 0}, {0, 1, 0}, {0, 2, 0}}, 0.2, 0.2, 16, 0.1); }

// Independent skinning: per-joint 4x4 chain matrices applied to homogeneous
// vertices and blended.
std::vector<Vec3> skin_oracle(const Mesh& m, const SkinningWeights& w, const KinematicTree& tree,
                              const KinematicParams& p) {
  std::vector<Eigen::Matrix4d> g(tree.joint_count());
  for (int j : tree.order()) {
    Eigen::Affine3d local = Eigen::Affine3d::Identity();
    local.translate(tree.rest(j));
    const Vec3 th = p.rotation(j);
    if (th.norm() > 0) local.rotate(Eigen::AngleAxisd(th.norm(), th.normalized()));
    local.translate(-tree.rest(j));
    Eigen::Matrix4d parent = Eigen::Matrix4d::Identity();
    if (tree.parent(j) == -1)
      parent.block<3, 1>(0, 3) = p.root_translation;
    else
      parent = g[tree.parent(j)];
    g[j] = parent * local.matrix();
  }
  std::vector<Vec3> out;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    for (const auto& i : w.vertices[v]) acc += i.weight * (g[i.joint] * m.vertices[v].homogeneous());
    out.push_back(acc.head<3>());
  }
  return out;
}

}  // namespace

TEST(Skinning, WeightsAreNormalisedAndSparse) {
  const KinematicTree tree({-1, 0, 1, 2, 0, 4}, {{0, 0, 0}, {0, 1, 0}, {0, 2, 0}, {0, 3, 0}, {1, 0, 0}, {2, 0, 0}});
  const Mesh m = make_icosphere(2, 1.5, {0.5, 1, 0});
  const SkinningWeights w = rig(m, tree);
  EXPECT_NO_THROW(w.validate(tree.joint_count()));
  for (const auto& inf : w.vertices) EXPECT_LE(inf.size(), 4u);
  EXPECT_EQ(rig(m, tree).vertices, w.vertices);
}

TEST(Skinning, VertexOnBoneBindsToIt) {
  Mesh m;
  m.vertices = {{0, 0.5, 0}, {0, 1.5, 0}};
  const SkinningWeights w = rig(m, two_bone());
  ASSERT_EQ(w.vertices[0].size(), 1u);
  EXPECT_EQ(w.vertices[0][0], (Influence{0, 1.0}));
  EXPECT_EQ(w.vertices[1][0], (Influence{1, 1.0}));
}

TEST(Skinning, EquidistantSplitsEvenly) {
  // An L-shaped chain; the point is nearest to the elbow on both bones.
  const KinematicTree tree({-1, 0, 1}, {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}});
  Mesh m;
  m.vertices = {{1.5, -0.5, 0.0}};
  const SkinningWeights w = rig(m, tree);
  ASSERT_EQ(w.vertices[0].size(), 2u);
  EXPECT_NEAR(w.vertices[0][0].weight, 0.5, 1e-15);
  EXPECT_NEAR(w.vertices[0][1].weight, 0.5, 1e-15);
}

TEST(Skinning, BindPoseIsIdentity) {
  const Mesh m = tube();
  const SkinningWeights w = rig(m, two_bone());
  const Mesh out = lbs_deform(m, w, two_bone(), KinematicParams::zero(3));
  EXPECT_EQ(out.vertices, m.vertices);
  EXPECT_EQ(out.triangles, m.triangles);
}

TEST(Skinning, RootOnlyWeightsMoveRigidly) {
  const Mesh m = tube();
  SkinningWeights w;
  w.vertices.assign(m.vertices.size(), {{0, 1.0}});
  KinematicParams p = KinematicParams::zero(3);
  p.theta.row(0) << 0.3, -0.2, 0.9;
  p.theta.row(1) << 1.0, 0.0, 0.0;
  const Mesh out = lbs_deform(m, w, two_bone(), p);
  const Mat3 r = rotation_from_vector(p.rotation(0));
  for (std::size_t v = 0; v < m.vertices.size(); ++v) EXPECT_LT((out.vertices[v] - r * m.vertices[v]).norm(), 1e-15);
}

TEST(Skinning, BentTubeMatchesOracle) {
  const Mesh m = tube();
  const KinematicTree tree = two_bone();
  const SkinningWeights w = rig(m, tree);
  KinematicParams p = KinematicParams::zero(3);
  p.theta.row(1) << 0, 0, M_PI / 2;
  p.root_translation = Vec3(0.1, 0, -0.2);
  const Mesh bent = lbs_deform(m, w, tree, p);
  const auto ref = skin_oracle(m, w, tree, p);
  for (std::size_t v = 0; v < m.vertices.size(); ++v) EXPECT_LT((bent.vertices[v] - ref[v]).norm(), 1e-9);
  // The tip bone now points along -x from the elbow.
  EXPECT_LT((forward_kinematics(tree, p)[2] - Vec3(-0.9, 1, -0.2)).norm(), 1e-12);
}

TEST(Skinning, VertexJacobianMatchesFiniteDifferences) {
  const Mesh m = tube();
  const KinematicTree tree = two_bone();
  const SkinningWeights w = rig(m, tree);
  KinematicParams p = KinematicParams::zero(3);
  p.theta.row(0) << 0.2, 0.1, -0.3;
  p.theta.row(1) << -0.4, 0.7, 0.2;
  const Pose ps = pose(tree, p);
  Eigen::MatrixXd jac(3, 12);
  const double h = 1e-6;
  for (std::size_t v = 0; v < m.vertices.size(); v += 7) {
    skinned_vertex_jacobian(tree, ps, m.vertices[v], w.vertices[v], jac);
    for (int c = 0; c < 12; ++c) {
      Eigen::VectorXd up = p.pack(), down = p.pack();
      up(c) += h;
      down(c) -= h;
      const Vec3 fd = (skin_vertex(m.vertices[v], w.vertices[v], pose(tree, KinematicParams::unpack(up))) -
                       skin_vertex(m.vertices[v], w.vertices[v], pose(tree, KinematicParams::unpack(down)))) /
                      (2 * h);
      EXPECT_LT((jac.col(c) - fd).norm(), 1e-7);
    }
  }
}
