#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dfv/errors.hpp"
#include "dfv/report.hpp"
#include "dfv/util.hpp"

using namespace dfv;

namespace {

std::vector<const FeatureToken*> as_ptrs(const std::vector<FeatureToken>& v) {
    std::vector<const FeatureToken*> out;
    for (const FeatureToken& t : v) out.push_back(&t);
    return out;
}

std::vector<FeatureToken> mf_cloud(const std::string& phoneme, Condition cond, int n, double f1,
                                   double f2, double sd1, double sd2, uint64_t seed) {
    Rng rng(seed);
    std::vector<FeatureToken> out;
    for (int i = 0; i < n; ++i) {
        FeatureToken t;
        t.family = Family::mf;
        t.speaker = "sp";
        t.phoneme = phoneme;
        t.condition = cond;
        t.values = {rng.normal(f1, sd1), rng.normal(f2, sd2), 2500.0};
        out.push_back(t);
    }
    return out;
}

std::vector<FeatureToken> ltfd_cloud(int n, double f1, double f2, double f3, double sd,
                                     uint64_t seed) {
    Rng rng(seed);
    std::vector<FeatureToken> out;
    for (int i = 0; i < n; ++i) {
        FeatureToken t;
        t.family = Family::ltfd;
        t.speaker = "sp";
        t.condition = Condition::real;
        t.values = {rng.normal(f1, sd), rng.normal(f2, sd), rng.normal(f3, sd)};
        out.push_back(t);
    }
    return out;
}

}  // namespace

TEST_CASE("isotropic cloud gives a near-circular 75 % ellipse") {
    auto tokens = mf_cloud("ʊ", Condition::real, 4000, 500.0, 1500.0, 10.0, 10.0, 101);
    auto ellipses = emit_ellipses(as_ptrs(tokens), 0.75);
    REQUIRE(ellipses.size() == 1);
    const EllipseSpec& e = ellipses[0];
    CHECK(e.phoneme == "ʊ");
    CHECK(e.n_tokens == 4000);
    CHECK(e.mean_f1 == doctest::Approx(500.0).epsilon(0.01));
    CHECK(e.mean_f2 == doctest::Approx(1500.0).epsilon(0.01));
    // chi2(2 dof, 0.75) = -2 ln 0.25 = 2.7726; half-axis = sd * 1.6651
    CHECK(e.major == doctest::Approx(10.0 * 1.66511).epsilon(0.05));
    CHECK(e.minor == doctest::Approx(10.0 * 1.66511).epsilon(0.05));
    CHECK(!e.degenerate);
}

TEST_CASE("elongation picks the major axis and angle") {
    // wide in F2 (x), narrow in F1 (y): angle ~ 0
    auto tokens = mf_cloud("a", Condition::fake, 3000, 700.0, 1200.0, 20.0, 80.0, 102);
    auto ellipses = emit_ellipses(as_ptrs(tokens), 0.75);
    REQUIRE(ellipses.size() == 1);
    CHECK(ellipses[0].major == doctest::Approx(80.0 * 1.66511).epsilon(0.08));
    CHECK(ellipses[0].minor == doctest::Approx(20.0 * 1.66511).epsilon(0.08));
    double angle = std::abs(std::remainder(ellipses[0].angle_rad, std::acos(-1.0)));
    CHECK(angle < 0.1);

    // narrow in F2, wide in F1: angle ~ pi/2
    auto tall = mf_cloud("i", Condition::real, 3000, 300.0, 2200.0, 90.0, 15.0, 103);
    auto e2 = emit_ellipses(as_ptrs(tall), 0.75);
    REQUIRE(e2.size() == 1);
    double a2 = std::abs(std::remainder(e2[0].angle_rad, std::acos(-1.0)));
    CHECK(a2 == doctest::Approx(std::acos(-1.0) / 2.0).epsilon(0.1));
}

TEST_CASE("ellipse confidence scaling is monotone") {
    auto tokens = mf_cloud("ʊ", Condition::real, 2000, 500.0, 1500.0, 12.0, 12.0, 104);
    auto lo = emit_ellipses(as_ptrs(tokens), 0.50);
    auto hi = emit_ellipses(as_ptrs(tokens), 0.95);
    REQUIRE(lo.size() == 1);
    REQUIRE(hi.size() == 1);
    CHECK(hi[0].major > lo[0].major);
    // ratio = sqrt(ln 0.05 / ln 0.5)
    CHECK(hi[0].major / lo[0].major ==
          doctest::Approx(std::sqrt(std::log(0.05) / std::log(0.5))).epsilon(1e-6));
}

TEST_CASE("degenerate and scarce ellipse groups") {
    std::vector<FeatureToken> tokens;
    for (int i = 0; i < 5; ++i) {
        FeatureToken t;
        t.family = Family::mf;
        t.phoneme = "u";
        t.condition = Condition::real;
        t.values = {400.0, 900.0, 2300.0};  // identical points
        tokens.push_back(t);
    }
    FeatureToken lone = tokens[0];
    lone.phoneme = "e";  // only one token: group skipped
    tokens.push_back(lone);

    std::vector<std::string> warnings;
    auto ellipses = emit_ellipses(as_ptrs(tokens), 0.75, &warnings);
    REQUIRE(ellipses.size() == 1);
    CHECK(ellipses[0].degenerate);
    CHECK(ellipses[0].minor == 0.0);
    CHECK(!warnings.empty());

    CHECK_THROWS_AS(emit_ellipses(as_ptrs(tokens), 0.0), ContractError);
    CHECK_THROWS_AS(emit_ellipses(as_ptrs(tokens), 1.0), ContractError);
}

TEST_CASE("ltfd density integrates to one and peaks at the mode") {
    auto tokens = ltfd_cloud(4000, 500.0, 1480.0, 2500.0, 50.0, 105);
    for (int fi : {1, 2, 3}) {
        DensityCurve curve = emit_ltfd_density(as_ptrs(tokens), fi, 0.0, 5500.0, 512);
        REQUIRE(curve.hz.size() == 512);
        REQUIRE(curve.density.size() == 512);
        CHECK(curve.bandwidth > 0.0);

        double integral = 0.0;
        for (size_t i = 1; i < curve.hz.size(); ++i)
            integral += 0.5 * (curve.density[i] + curve.density[i - 1]) *
                        (curve.hz[i] - curve.hz[i - 1]);
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));

        size_t argmax = 0;
        for (size_t i = 0; i < curve.density.size(); ++i)
            if (curve.density[i] > curve.density[argmax]) argmax = i;
        double expected = fi == 1 ? 500.0 : fi == 2 ? 1480.0 : 2500.0;
        CHECK(std::abs(curve.hz[argmax] - expected) < 30.0);
    }
}

TEST_CASE("explicit density bandwidth is honored") {
    auto tokens = ltfd_cloud(500, 600.0, 1500.0, 2500.0, 40.0, 106);
    DensityCurve curve = emit_ltfd_density(as_ptrs(tokens), 1, 25.0, 5500.0, 256);
    CHECK(curve.bandwidth == 25.0);
    CHECK(curve.hz.front() == 0.0);
    CHECK(curve.hz.back() == doctest::Approx(5500.0));
    CHECK_THROWS_AS(emit_ltfd_density({}, 1, 0.0, 5500.0, 256), InsufficientDataError);
    CHECK_THROWS_AS(emit_ltfd_density(as_ptrs(tokens), 4, 0.0, 5500.0, 256), ContractError);
}

TEST_CASE("fbank profile z-scores against pooled speaker statistics") {
    Rng rng(107);
    std::vector<FeatureToken> tokens;
    auto add_frames = [&](Condition cond, int n, double band5_offset) {
        for (int i = 0; i < n; ++i) {
            FeatureToken t;
            t.family = Family::fbank;
            t.speaker = "sp";
            t.condition = cond;
            t.values.assign(26, 0.0);
            for (int d = 0; d < 26; ++d) t.values[static_cast<size_t>(d)] = rng.normal(0.0, 1.0);
            t.values[5] += band5_offset;
            tokens.push_back(t);
        }
    };
    add_frames(Condition::real, 400, 0.0);
    add_frames(Condition::fake, 400, 2.0);

    auto profiles = emit_fbank_profile(as_ptrs(tokens));
    REQUIRE(profiles.size() == 2);
    const FbankProfile* real_p = nullptr;
    const FbankProfile* fake_p = nullptr;
    for (const auto& p : profiles) {
        if (p.condition == Condition::real) real_p = &p;
        if (p.condition == Condition::fake) fake_p = &p;
    }
    REQUIRE(real_p);
    REQUIRE(fake_p);
    REQUIRE(real_p->mean.size() == 26);
    CHECK(fake_p->n_frames == 400);

    // band 5 separates; other bands sit near zero
    CHECK(fake_p->mean[5] - real_p->mean[5] > 1.0);
    for (int d : {0, 1, 10, 25}) {
        CHECK(std::abs(real_p->mean[static_cast<size_t>(d)]) < 0.2);
        CHECK(std::abs(fake_p->mean[static_cast<size_t>(d)]) < 0.2);
    }
    for (size_t d = 0; d < 26; ++d) {
        CHECK(real_p->ci_lo[d] <= real_p->mean[d]);
        CHECK(real_p->ci_hi[d] >= real_p->mean[d]);
    }
}

TEST_CASE("single condition z-scores to exactly zero mean") {
    std::vector<FeatureToken> tokens;
    Rng rng(108);
    for (int i = 0; i < 50; ++i) {
        FeatureToken t;
        t.family = Family::fbank;
        t.speaker = "solo";
        t.condition = Condition::s1;
        for (int d = 0; d < 26; ++d) t.values.push_back(rng.normal(5.0, 2.0));
        t.values[3] = 7.0;  // constant band: zero pooled SD -> z = 0
        tokens.push_back(t);
    }
    auto profiles = emit_fbank_profile(as_ptrs(tokens));
    REQUIRE(profiles.size() == 1);
    for (size_t d = 0; d < 26; ++d)
        CHECK(profiles[0].mean[d] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("fbank CI width shrinks like 1/sqrt(n)") {
    auto build = [](int n, uint64_t seed) {
        Rng rng(seed);
        std::vector<FeatureToken> tokens;
        for (int i = 0; i < 2 * n; ++i) {
            FeatureToken t;
            t.family = Family::fbank;
            t.speaker = "sp";
            t.condition = i < n ? Condition::real : Condition::fake;
            for (int d = 0; d < 26; ++d) t.values.push_back(rng.normal(0.0, 1.0));
            tokens.push_back(t);
        }
        return tokens;
    };
    auto small = build(200, 109);
    auto large = build(3200, 109);
    auto ps = emit_fbank_profile(as_ptrs(small));
    auto pl = emit_fbank_profile(as_ptrs(large));
    REQUIRE(ps.size() == 2);
    REQUIRE(pl.size() == 2);
    double ws = ps[0].ci_hi[7] - ps[0].ci_lo[7];
    double wl = pl[0].ci_hi[7] - pl[0].ci_lo[7];
    CHECK(ws / wl == doctest::Approx(4.0).epsilon(0.25));  // sqrt(3200/200) = 4
}

TEST_CASE("csv emitters produce one row per element") {
    auto tokens = mf_cloud("ʊ", Condition::real, 100, 500.0, 1500.0, 10.0, 10.0, 110);
    auto ellipses = emit_ellipses(as_ptrs(tokens), 0.75);
    std::string csv = ellipses_to_csv(ellipses);
    CHECK(csv.find("phoneme,condition,mean_f2,mean_f1,major,minor,angle_rad") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + 1 row

    auto ltfd = ltfd_cloud(100, 500.0, 1500.0, 2500.0, 30.0, 111);
    DensityCurve curve = emit_ltfd_density(as_ptrs(ltfd), 1, 0.0, 5500.0, 64);
    std::string dcsv = density_to_csv(curve);
    CHECK(std::count(dcsv.begin(), dcsv.end(), '\n') == 65);

    FbankProfile p;
    p.speaker = "sp";
    p.condition = Condition::real;
    p.mean.assign(26, 0.0);
    p.ci_lo.assign(26, -0.1);
    p.ci_hi.assign(26, 0.1);
    p.n_frames = 5;
    std::string fcsv = fbank_profile_to_csv(p);
    CHECK(std::count(fcsv.begin(), fcsv.end(), '\n') == 27);
    CHECK(fcsv.find("band,mean,ci_lo,ci_hi") != std::string::npos);
}
