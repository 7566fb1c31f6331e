#include "cellmap/errors.hpp"
#include "cellmap/rng.hpp"
#include "cellmap/splits.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <vector>

using namespace cellmap;

namespace {

/// 18 slides, 3 per pattern, with uneven tile counts.
Manifest cohort_manifest(std::size_t total_target, std::uint64_t seed)
{
    Rng rng(seed);
    const std::size_t per = total_target / 18;
    std::vector<std::size_t> counts(18);
    std::size_t sum = 0;
    for (auto& c : counts) {
        c = per / 2 + rng.below(per / 2 + 1);
        sum += c;
    }
    // The last slide absorbs the remainder so the total hits the target.
    counts.back() += total_target - sum;
    Manifest m;
    for (std::size_t s = 0; s < counts.size(); ++s) {
        const auto label = kAllPatterns[s / 3];
        for (std::size_t t = 0; t < counts[s]; ++t) {
            m.push_back({"s" + std::to_string(s) + "_r0_c" + std::to_string(t), "s" + std::to_string(s), label});
        }
    }
    return m;
}

std::set<std::string> slides_in(const SplitPlan& plan, Part part)
{
    std::set<std::string> out;
    for (const auto& e : plan.entries) {
        if (e.part == part) {
            out.insert(e.tile.slide_id);
        }
    }
    return out;
}

std::size_t count_part(const SplitPlan& plan, Part part)
{
    std::size_t n = 0;
    for (const auto& e : plan.entries) {
        n += e.part == part ? 1 : 0;
    }
    return n;
}

/// Test tiles sharing a slide with the non-test side of each round.
std::vector<std::size_t> brute_force_leakage(const SplitPlan& plan)
{
    std::vector<std::size_t> out;
    const int rounds = plan.policy == SplitPolicy::WsiBased ? 1 : plan.folds;
    for (int r = 0; r < rounds; ++r) {
        auto is_test = [&](const PlanEntry& e) {
            return plan.policy == SplitPolicy::WsiBased ? e.part == Part::Test : e.fold == r;
        };
        std::size_t leaked = 0;
        for (const auto& t : plan.entries) {
            if (!is_test(t)) {
                continue;
            }
            for (const auto& o : plan.entries) {
                if (!is_test(o) && o.tile.slide_id == t.tile.slide_id) {
                    ++leaked;
                    break;
                }
            }
        }
        out.push_back(leaked);
    }
    return out;
}

} // namespace

TEST_CASE("WSI split of an 18-slide cohort")
{
    const auto m = cohort_manifest(1034, 1);
    REQUIRE(m.size() == 1034);
    const auto plan = make_wsi_split(m, 7);
    REQUIRE(plan.entries.size() == m.size());
    const auto test = slides_in(plan, Part::Test);
    CHECK(test.size() == 6);
    auto rest = slides_in(plan, Part::Train);
    rest.merge(slides_in(plan, Part::Val));
    for (const auto& s : test) {
        CHECK(rest.count(s) == 0);
    }
    const auto non_test = m.size() - count_part(plan, Part::Test);
    CHECK(count_part(plan, Part::Val) == static_cast<std::size_t>(std::llround(0.10 * non_test)));

    std::set<GrowthPattern> covered;
    for (const auto& e : plan.entries) {
        if (e.part == Part::Test) {
            covered.insert(e.tile.label);
        }
    }
    CHECK(covered.size() == kNumPatterns);
}

TEST_CASE("a pattern on a single slide is always tested")
{
    auto m = cohort_manifest(600, 2);
    // Relabel so solid lives on slide s12 only.
    for (auto& t : m) {
        if (t.slide_id == "s13" || t.slide_id == "s14") {
            t.label = GrowthPattern::Acinar;
        }
    }
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto plan = make_wsi_split(m, seed);
        CHECK(slides_in(plan, Part::Test).count("s12") == 1);
    }
}

TEST_CASE("WSI split determinism")
{
    const auto m = cohort_manifest(500, 3);
    CHECK(make_wsi_split(m, 11, 2) == make_wsi_split(m, 11, 2));
    CHECK(plan_to_csv(make_wsi_split(m, 11, 2)) == plan_to_csv(make_wsi_split(m, 11, 2)));
    CHECK_FALSE(make_wsi_split(m, 11, 2) == make_wsi_split(m, 12, 2));
    CHECK_FALSE(make_wsi_split(m, 11, 2) == make_wsi_split(m, 11, 3));
}

TEST_CASE("infeasible WSI splits")
{
    Manifest one;
    for (int t = 0; t < 10; ++t) {
        one.push_back({"a_r0_c" + std::to_string(t), "a", kAllPatterns[t % 6]});
    }
    CHECK_THROWS_AS(make_wsi_split(one, 1), InfeasibleSplit);

    auto m = cohort_manifest(400, 4);
    std::erase_if(m, [](const LabeledTile& t) { return t.label == GrowthPattern::NonTumor; });
    CHECK_THROWS_AS(make_wsi_split(m, 1), InfeasibleSplit);
}

TEST_CASE("tile k-fold sizes")
{
    auto manifest_of = [](int n) {
        Manifest m;
        for (int i = 0; i < n; ++i) {
            m.push_back({"s_r0_c" + std::to_string(i), "s" + std::to_string(i % 3), kAllPatterns[i % 6]});
        }
        return m;
    };
    auto sizes = [](const SplitPlan& p) {
        std::map<int, std::size_t> n;
        for (const auto& e : p.entries) {
            ++n[e.fold];
        }
        return n;
    };
    CHECK(sizes(make_tile_kfold(manifest_of(10), 5, 1)) == std::map<int, std::size_t>{{0, 2}, {1, 2}, {2, 2}, {3, 2}, {4, 2}});
    CHECK(sizes(make_tile_kfold(manifest_of(11), 5, 1)) == std::map<int, std::size_t>{{0, 3}, {1, 2}, {2, 2}, {3, 2}, {4, 2}});
    CHECK_THROWS_AS(make_tile_kfold(manifest_of(3), 5, 1), InfeasibleSplit);
    CHECK_THROWS_AS(make_tile_kfold(manifest_of(10), 1, 1), ConfigError);

    const auto plan = make_tile_kfold(manifest_of(57), 5, 9);
    std::set<std::string> ids;
    for (const auto& e : plan.entries) {
        CHECK(e.fold >= 0);
        CHECK(e.fold < 5);
        ids.insert(e.tile.tile_id);
    }
    CHECK(ids.size() == 57);
}

TEST_CASE("evaluation rounds")
{
    const auto m = cohort_manifest(300, 5);
    const auto wsi = eval_rounds(make_wsi_split(m, 1));
    REQUIRE(wsi.size() == 1);
    CHECK(wsi[0].name == "test");
    CHECK(wsi[0].train.size() + wsi[0].val.size() + wsi[0].test.size() == m.size());

    const auto kf = eval_rounds(make_tile_kfold(m, 5, 1));
    REQUIRE(kf.size() == 5);
    CHECK(kf[3].name == "fold3");
    for (const auto& r : kf) {
        CHECK(r.val.empty());
        CHECK(r.train.size() + r.test.size() == m.size());
    }
}

TEST_CASE("leakage audit matches a brute-force count")
{
    const auto m = cohort_manifest(700, 6);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        for (const auto& plan : {make_wsi_split(m, seed), make_tile_kfold(m, 5, seed)}) {
            const auto report = audit_leakage(plan, m);
            const auto want = brute_force_leakage(plan);
            REQUIRE(report.rows.size() == want.size());
            for (std::size_t r = 0; r < want.size(); ++r) {
                CHECK(report.rows[r].leaked_tiles == want[r]);
            }
            if (plan.policy == SplitPolicy::WsiBased) {
                CHECK(report.total_leaked() == 0);
            }
        }
    }
}

TEST_CASE("dense slides leak every tile under k-fold")
{
    // Every slide has 40 tiles; with 5 folds each fold's test tiles all have
    // slide-mates elsewhere for this seed.
    Manifest m;
    for (int s = 0; s < 6; ++s) {
        for (int t = 0; t < 40; ++t) {
            m.push_back({"s" + std::to_string(s) + "_r0_c" + std::to_string(t), "s" + std::to_string(s),
                         kAllPatterns[s]});
        }
    }
    const auto report = audit_leakage(make_tile_kfold(m, 5, 7), m);
    for (const auto& row : report.rows) {
        CHECK(row.leaked_tiles == row.test_tiles);
    }
}

TEST_CASE("audit rejects plans that do not cover the manifest")
{
    const auto m = cohort_manifest(300, 7);
    auto plan = make_tile_kfold(m, 5, 1);
    plan.entries.pop_back();
    CHECK_THROWS_AS(audit_leakage(plan, m), DataError);
}

TEST_CASE("CSV round trips")
{
    const auto m = cohort_manifest(200, 8);
    CHECK(manifest_from_csv(manifest_to_csv(m)) == m);
    const auto wsi = make_wsi_split(m, 3, 4);
    CHECK(plan_from_csv(plan_to_csv(wsi)) == wsi);
    const auto kf = make_tile_kfold(m, 5, 3, 1);
    CHECK(plan_from_csv(plan_to_csv(kf)) == kf);

    auto dup = m;
    dup.push_back(m.front());
    CHECK_THROWS_AS(manifest_from_csv(manifest_to_csv(dup)), DataError);
}
