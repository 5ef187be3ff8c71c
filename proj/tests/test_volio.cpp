#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "interseg/volio.hpp"
#include "oracles.hpp"

using namespace interseg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "interseg_test_volio";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<unsigned char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

// Header built field by field from the NIfTI-1 layout table, independently
// of the engine's writer.
struct RefHeader {
  std::vector<unsigned char> bytes = std::vector<unsigned char>(352, 0);
  bool big = false;

  template <typename T>
  void put(std::size_t off, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if (big) std::reverse(b, b + sizeof(T));
    std::memcpy(bytes.data() + off, b, sizeof(T));
  }

  RefHeader(bool big_endian, Shape3 s, std::int16_t datatype, std::int16_t bitpix) : big(big_endian) {
    put<std::int32_t>(0, 348);
    const std::int16_t dim[8] = {3, static_cast<std::int16_t>(s.nx), static_cast<std::int16_t>(s.ny),
                                 static_cast<std::int16_t>(s.nz), 1, 1, 1, 1};
    for (int i = 0; i < 8; ++i) put<std::int16_t>(40 + 2 * i, dim[i]);
    put<std::int16_t>(70, datatype);
    put<std::int16_t>(72, bitpix);
    const float pixdim[8] = {1, 0.5f, 2.0f, 3.0f, 1, 1, 1, 1};
    for (int i = 0; i < 8; ++i) put<float>(76 + 4 * i, pixdim[i]);
    put<float>(108, 352.0f);
    std::memcpy(bytes.data() + 344, "n+1\0", 4);
  }
};

Volume3D ramp_volume() {
  Volume3D v({4, 4, 4}, 0.0f, {0.5, 1.25, 3.0});
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i) * 0.37f - 11.0f;
  v[3] = -0.0f;
  v[5] = 1.0e-40f;  // subnormal
  v[7] = 3.4e38f;
  return v;
}

}  // namespace

TEST(Nifti, Float32RoundTripIsBitExact) {
  const Volume3D v = ramp_volume();
  for (const char* name : {"rt.nii", "rt.nii.gz"}) {
    const fs::path p = scratch(name);
    write_nifti(v, p.string(), NiftiType::float32);
    const NiftiImage back = read_nifti(p.string());
    ASSERT_EQ(back.data.shape(), v.shape());
    EXPECT_EQ(std::memcmp(back.data.data().data(), v.data().data(), v.size() * sizeof(float)), 0) << name;
    for (int a = 0; a < 3; ++a) EXPECT_EQ(back.data.spacing()[a], v.spacing()[a]);
  }
}

TEST(Nifti, IntegerTypesRoundTripExactly) {
  interseg::Rng rng(5);
  for (NiftiType t : {NiftiType::uint8, NiftiType::int16, NiftiType::int32}) {
    LabelMap3D g({5, 3, 2}, 0);
    const int lo = t == NiftiType::uint8 ? 0 : t == NiftiType::int16 ? -32768 : -(1 << 24);
    const int hi = t == NiftiType::uint8 ? 255 : t == NiftiType::int16 ? 32767 : (1 << 24);
    for (auto& x : g) x = static_cast<std::int32_t>(rng.integer(lo, hi));
    g[0] = lo;
    g[1] = hi;
    const fs::path p = scratch("int.nii.gz");
    write_nifti(g, p.string(), t);
    const NiftiImage back = read_nifti(p.string());
    EXPECT_EQ(back.header.datatype, t);
    for (std::size_t i = 0; i < g.size(); ++i) ASSERT_EQ(back.data[i], static_cast<float>(g[i]));
  }
}

TEST(Nifti, WriterMatchesReferenceLayout) {
  Volume3D v({3, 2, 4}, 1.5f, {0.5, 2.0, 3.0});
  const fs::path p = scratch("layout.nii");
  write_nifti(v, p.string(), NiftiType::float32);
  const auto bytes = slurp(p);
  ASSERT_EQ(bytes.size(), 352u + 24u * 4u);
  const RefHeader ref(false, v.shape(), 16, 32);
  // Fields the engine defines: sizeof_hdr, dim, datatype, bitpix, pixdim[1..3], vox_offset, magic.
  for (auto [off, len] : std::vector<std::pair<int, int>>{{0, 4}, {40, 16}, {70, 2}, {72, 2}, {80, 12}, {108, 4}, {344, 4}})
    EXPECT_EQ(std::memcmp(bytes.data() + off, ref.bytes.data() + off, static_cast<std::size_t>(len)), 0)
        << "field at offset " << off;
  // No orientation transform is declared.
  EXPECT_EQ(bytes[252] | bytes[253] | bytes[254] | bytes[255], 0);
}

TEST(Nifti, GzipIffSuffix) {
  Volume3D v({4, 4, 4}, 2.0f);
  write_nifti(v, scratch("plain.nii").string(), NiftiType::float32);
  write_nifti(v, scratch("packed.nii.gz").string(), NiftiType::float32);
  const auto plain = slurp(scratch("plain.nii"));
  const auto packed = slurp(scratch("packed.nii.gz"));
  EXPECT_EQ(plain[0], 0x5c);  // 348 little-endian
  EXPECT_EQ(packed[0], 0x1f);
  EXPECT_EQ(packed[1], 0x8b);
}

TEST(Nifti, ReadsReferenceHeaderInBothByteOrders) {
  for (bool big : {false, true}) {
    RefHeader h(big, {2, 2, 1}, 4, 16);
    for (int i = 0; i < 4; ++i) h.bytes.insert(h.bytes.end(), {0, 0});
    for (int i = 0; i < 4; ++i) h.put<std::int16_t>(352 + 2 * i, static_cast<std::int16_t>(-3 + 1000 * i));
    const fs::path p = scratch(big ? "be.nii" : "le.nii");
    spit(p, h.bytes);
    const NiftiImage img = read_nifti(p.string());
    EXPECT_EQ(img.header.big_endian, big);
    EXPECT_EQ(img.data.shape(), (Shape3{2, 2, 1}));
    EXPECT_FLOAT_EQ(img.data.spacing()[0], 0.5);
    EXPECT_FLOAT_EQ(img.data.spacing()[2], 3.0);
    EXPECT_EQ(img.data[0], -3.0f);
    EXPECT_EQ(img.data[3], 2997.0f);
  }
}

TEST(Nifti, AppliesSlopeAndIntercept) {
  RefHeader h(false, {2, 1, 1}, 2, 8);
  h.put<float>(112, 2.5f);
  h.put<float>(116, -1.0f);
  h.bytes.push_back(4);
  h.bytes.push_back(10);
  const fs::path p = scratch("scaled.nii");
  spit(p, h.bytes);
  const NiftiImage img = read_nifti(p.string());
  EXPECT_FLOAT_EQ(img.data[0], 9.0f);
  EXPECT_FLOAT_EQ(img.data[1], 24.0f);
}

TEST(Nifti, DistinctErrorCodes) {
  auto code_of = [](const std::vector<unsigned char>& bytes) {
    const fs::path p = scratch("bad.nii");
    spit(p, bytes);
    try {
      read_nifti(p.string());
    } catch (const NiftiError& e) {
      return e.code();
    }
    ADD_FAILURE() << "no error";
    return NiftiErrc::io;
  };
  auto good = [] {
    RefHeader h(false, {2, 2, 2}, 2, 8);
    h.bytes.resize(352 + 8, 1);
    return h;
  };
  {
    auto h = good();
    std::memcpy(h.bytes.data() + 344, "ni1\0", 4);
    EXPECT_EQ(code_of(h.bytes), NiftiErrc::unsupported_format);
  }
  {
    auto h = good();
    std::memcpy(h.bytes.data() + 344, "xyz\0", 4);
    EXPECT_EQ(code_of(h.bytes), NiftiErrc::bad_magic);
  }
  {
    auto h = good();
    h.put<std::int16_t>(70, 64);
    EXPECT_EQ(code_of(h.bytes), NiftiErrc::unsupported_datatype);
  }
  {
    auto h = good();
    h.put<std::int16_t>(40, 4);
    EXPECT_EQ(code_of(h.bytes), NiftiErrc::bad_dim);
  }
  {
    auto h = good();
    h.put<std::int32_t>(0, 540);
    EXPECT_EQ(code_of(h.bytes), NiftiErrc::bad_header);
  }
  {
    auto h = good();
    h.bytes.pop_back();
    EXPECT_EQ(code_of(h.bytes), NiftiErrc::truncated);
  }
  EXPECT_THROW(read_nifti(scratch("does_not_exist.nii").string()), NiftiError);
}

TEST(Nifti, WriterRejectsUnrepresentableValues) {
  Volume3D v({2, 2, 2}, 0.0f);
  v[3] = std::numeric_limits<float>::quiet_NaN();
  try {
    write_nifti(v, scratch("nan.nii").string(), NiftiType::float32);
    FAIL();
  } catch (const NiftiError& e) {
    EXPECT_EQ(e.code(), NiftiErrc::unrepresentable);
  }
  Volume3D w({2, 2, 2}, 0.0f);
  w[0] = 300.0f;
  EXPECT_THROW(write_nifti(w, scratch("u8.nii").string(), NiftiType::uint8), NiftiError);
  w[0] = 1.5f;
  EXPECT_THROW(write_nifti(w, scratch("i16.nii").string(), NiftiType::int16), NiftiError);
}

TEST(Nifti, MaskStoredAsZeroOne) {
  BinaryMask3D m({3, 3, 3}, 0);
  m(1, 1, 1) = 1;
  m(0, 2, 1) = 1;
  write_nifti(m, scratch("mask.nii").string(), NiftiType::uint8);
  const auto bytes = slurp(scratch("mask.nii"));
  ASSERT_EQ(bytes.size(), 352u + 27u);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(bytes[352 + i], m[i]);
  const LabelMap3D back = read_nifti_labels(scratch("mask.nii").string());
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(back[i], m[i]);
}

TEST(Nifti, FuzzedTruncationsAlwaysError) {
  const Volume3D v = ramp_volume();
  for (const char* name : {"fz.nii", "fz.nii.gz"}) {
    const fs::path src = scratch(name);
    write_nifti(v, src.string(), NiftiType::float32);
    const auto full = slurp(src);
    const fs::path cut = scratch(std::string("cut_") + name);
    for (std::size_t len = 0; len < full.size(); ++len) {
      spit(cut, {full.begin(), full.begin() + static_cast<long>(len)});
      EXPECT_THROW(read_nifti(cut.string()), NiftiError) << name << " len " << len;
    }
  }
}

TEST(Nifti, RandomCorruptionNeverCrashes) {
  const Volume3D v = ramp_volume();
  const fs::path src = scratch("corrupt_src.nii");
  write_nifti(v, src.string(), NiftiType::float32);
  const auto full = slurp(src);
  interseg::Rng rng(99);
  const fs::path p = scratch("corrupt.nii");
  for (int trial = 0; trial < 400; ++trial) {
    auto b = full;
    const int flips = 1 + static_cast<int>(rng.below(4));
    for (int k = 0; k < flips; ++k) b[rng.below(352)] = static_cast<unsigned char>(rng.below(256));
    spit(p, b);
    try {
      const NiftiImage img = read_nifti(p.string());
      EXPECT_EQ(img.data.size(), img.data.shape().voxels());
    } catch (const NiftiError&) {
    } catch (const std::invalid_argument&) {
    }
  }
}

TEST(RawFormat, RoundTripAndSidecar) {
  const Volume3D v = ramp_volume();
  const fs::path p = scratch("vol.raw");
  write_raw(v, p);
  const Volume3D back = read_raw(p);
  EXPECT_EQ(std::memcmp(back.data().data(), v.data().data(), v.size() * 4), 0);
  EXPECT_EQ(back.spacing(), v.spacing());
  std::ifstream js(raw_sidecar(p));
  const json side = json::parse(js);
  EXPECT_EQ(side["dtype"], "float32");
  EXPECT_EQ(side["shape"], json({4, 4, 4}));

  LabelMap3D lab({3, 2, 1}, 7);
  write_raw(lab, scratch("lab.raw"), NiftiType::int16);
  EXPECT_EQ(read_labels(scratch("lab.raw")), lab);
}

TEST(RawFormat, TruncatedDataErrors) {
  write_raw(Volume3D({4, 4, 4}, 1.0f), scratch("short.raw"));
  auto b = slurp(scratch("short.raw"));
  b.resize(b.size() - 1);
  spit(scratch("short.raw"), b);
  EXPECT_THROW(read_raw(scratch("short.raw")), NiftiError);
}

// ---------------------------------------------------------------- instances

TEST(Instances, TwoDisjointBlobsOfOneClass) {
  LabelMap3D sem({8, 4, 4}, 0);
  sem(1, 1, 1) = 7;
  sem(2, 1, 1) = 7;
  sem(6, 2, 2) = 7;
  const InstanceMap im = instances_from_semantic(sem);
  ASSERT_EQ(im.count(), 2);
  EXPECT_EQ(im.instance_class, (std::vector<int>{7, 7}));
  EXPECT_EQ(im.instances(1, 1, 1), 1);
  EXPECT_EQ(im.instances(2, 1, 1), 1);
  EXPECT_EQ(im.instances(6, 2, 2), 2);
}

TEST(Instances, CloseMergesBlobsOneVoxelApart) {
  LabelMap3D sem({13, 7, 7}, 0);
  for (int z = 1; z < 6; ++z)
    for (int y = 1; y < 6; ++y) {
      for (int x = 1; x < 6; ++x) sem(x, y, z) = 3;
      for (int x = 7; x < 12; ++x) sem(x, y, z) = 3;
    }
  EXPECT_EQ(instances_from_semantic(sem).count(), 2);
  CleanupConfig cfg;
  cfg.per_class[3] = {0, 1};
  const InstanceMap im = instances_from_semantic(sem, cfg);
  EXPECT_EQ(im.count(), 1);
  EXPECT_EQ(im.instances(6, 3, 3), 1);
}

TEST(Instances, EmptyMapIsEmpty) {
  const InstanceMap im = instances_from_semantic(LabelMap3D({5, 5, 5}, 0));
  EXPECT_EQ(im.count(), 0);
  for (auto v : im.instances) EXPECT_EQ(v, 0);
}

TEST(Instances, ConsecutiveIdsAndConservationAgainstOracle) {
  interseg::Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    LabelMap3D sem({7, 6, 5}, 0);
    for (auto& v : sem) v = rng.bernoulli(0.3) ? static_cast<std::int32_t>(1 + rng.below(3)) : 0;
    const InstanceMap im = instances_from_semantic(sem);
    int expected = 0;
    for (int cls = 1; cls <= 3; ++cls) {
      BinaryMask3D m(sem.shape(), 0);
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = sem[i] == cls;
      expected += oracle::count_roots(oracle::union_find_roots(m, 26));
    }
    ASSERT_EQ(im.count(), expected);
    std::vector<int> seen(static_cast<std::size_t>(im.count()) + 1, 0);
    for (std::size_t i = 0; i < sem.size(); ++i) {
      ASSERT_EQ(im.instances[i] != 0, sem[i] != 0);
      if (im.instances[i]) {
        ASSERT_LE(im.instances[i], im.count());
        seen[static_cast<std::size_t>(im.instances[i])] = 1;
        ASSERT_EQ(im.instance_class[static_cast<std::size_t>(im.instances[i]) - 1], sem[i]);
      }
    }
    for (int id = 1; id <= im.count(); ++id) ASSERT_TRUE(seen[static_cast<std::size_t>(id)]);
  }
}

// ---------------------------------------------------------------- manifests and cases

TEST(LoadCase, ZScoreAndInstances) {
  Volume3D img({6, 4, 3}, 0.0f);
  interseg::Rng rng(3);
  for (auto& v : img) v = static_cast<float>(100.0 + 40.0 * rng.normal());
  LabelMap3D lab({6, 4, 3}, 0);
  lab(0, 0, 0) = 7;
  lab(4, 2, 1) = 7;
  write_nifti(img, scratch("case_img.nii.gz").string(), NiftiType::float32);
  write_nifti(lab, scratch("case_lab.nii.gz").string(), NiftiType::uint8);
  const json mj = {{"datasets", {{"ds", {{"weight", 2.0}, {"cleanup", {{"default", {{"open", 0}}}}}}}}},
                   {"cases", {{{"id", "c0"}, {"dataset", "ds"}, {"image", "case_img.nii.gz"}, {"label", "case_lab.nii.gz"}}}}};
  const Manifest m = parse_manifest(mj, scratch("").parent_path());
  ASSERT_EQ(m.cases.size(), 1u);
  EXPECT_EQ(m.cases[0].weight, 2.0);
  const LoadedCase c = load_case(m.cases[0]);
  double sum = 0, sq = 0;
  for (float v : c.image) sum += v;
  const double mean = sum / static_cast<double>(c.image.size());
  for (float v : c.image) sq += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 0.0, 1e-5);
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(c.image.size())), 1.0, 1e-5);
  EXPECT_FALSE(c.degenerate_std);
  EXPECT_EQ(c.labels.count(), 2);
  EXPECT_EQ(c.labels.instances(0, 0, 0), 1);
  EXPECT_EQ(c.labels.instances(4, 2, 1), 2);
}

TEST(LoadCase, ConstantImageFlagsDegenerateStd) {
  const LoadedCase c = prepare_case("k", Volume3D({3, 3, 3}, 5.0f), LabelMap3D({3, 3, 3}, 1), {});
  EXPECT_TRUE(c.degenerate_std);
  for (float v : c.image) EXPECT_EQ(v, 0.0f);
}

TEST(LoadCase, ShapeMismatchThrows) {
  EXPECT_THROW(prepare_case("k", Volume3D({3, 3, 3}, 1.0f), LabelMap3D({3, 3, 2}, 0), {}), std::invalid_argument);
}

TEST(Manifest, MissingFileIsReported) {
  const json mj = {{"cases", {{{"id", "x"}, {"image", "nope.nii"}, {"label", "nope2.nii"}}}}};
  EXPECT_THROW(parse_manifest(mj, scratch("").parent_path()), IoError);
}

TEST(Manifest, PerClassCleanupParsed) {
  const json cj = {{"default", {{"open", 1}}}, {"classes", {{"2", {{"close", 2}}}}}};
  const CleanupConfig c = parse_cleanup(cj);
  EXPECT_EQ(c.for_class(1), (CleanupRadius{1, 0}));
  EXPECT_EQ(c.for_class(2), (CleanupRadius{0, 2}));
}
