#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "analysis/export.hpp"
#include "analysis/regions.hpp"
#include "analysis/regression.hpp"
#include "analysis/surprisal.hpp"
#include "analysis_oracles.hpp"
#include "corpus/lexicon.hpp"
#include "corpus/stimuli.hpp"
#include "error.hpp"

using namespace adaptlm;
using namespace adaptlm::analysis;

namespace {

std::vector<SurprisalRecord> stream(const std::vector<double>& s, const std::string& text = "t") {
  std::vector<SurprisalRecord> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    SurprisalRecord r;
    r.text_id = text;
    r.token_index = i;
    r.token = "w" + std::to_string(i);
    r.surprisal = s[i];
    r.word_length = r.token.size();
    r.sentence_position = i + 1;
    out.push_back(r);
  }
  return out;
}

// Records for an item's sentence with the given per-token surprisals.
std::vector<SurprisalRecord> item_records(const corpus::StimulusItem& item, const std::vector<double>& s) {
  std::vector<SurprisalRecord> out;
  for (std::size_t i = 0; i < item.tokens.size(); ++i) {
    SurprisalRecord r;
    r.token = item.tokens[i];
    r.surprisal = s[i];
    r.sentence_position = i + 1;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("surprisal from log-probabilities") {
    CHECK(surprisal_from_logprob(0.0) == 0.0);
    CHECK(surprisal_from_logprob(std::log(0.5)) == doctest::Approx(kLn2).epsilon(1e-15));
    CHECK(surprisal_from_logprob(std::log(0.5), true) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(surprisal_from_logprob(-std::log(10.0)) == doctest::Approx(std::log(10.0)));
    CHECK_THROWS_AS(surprisal_from_logprob(0.1), Error);
  }

  TEST_CASE("perplexity") {
    const auto uniform = stream(std::vector<double>(7, std::log(10.0)));
    CHECK(perplexity(uniform) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(perplexity(stream({0, 0, 0})) == 1.0);
    CHECK(std::isinf(perplexity(stream({1.0, std::numeric_limits<double>::infinity()}))));
    CHECK_THROWS_AS(perplexity(std::span<const SurprisalRecord>{}), Error);
    // Merged streams: exp of the token-weighted mean of the parts' log-perplexities.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 8.0);
    std::vector<double> a(13), b(29);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    auto all = a;
    all.insert(all.end(), b.begin(), b.end());
    const double merged = std::exp((13 * std::log(perplexity(stream(a))) + 29 * std::log(perplexity(stream(b)))) / 42);
    CHECK(perplexity(stream(all)) == doctest::Approx(merged).epsilon(1e-12));
  }

  TEST_CASE("word length counts code points") {
    CHECK(word_length("dog") == 3);
    CHECK(word_length("caf\xc3\xa9") == 4);
    CHECK(word_length("") == 0);
  }

  TEST_CASE("records TSV round trip") {
    auto recs = stream({0.5, 1.25, std::numeric_limits<double>::infinity()});
    recs[1].condition = "ambiguous";
    recs[1].pair_id = 4;
    recs[1].in_region = true;
    recs[2].is_eos = true;
    const auto text = format_records_tsv(recs);
    CHECK(text.rfind(std::string(kRecordsHeader) + "\n", 0) == 0);
    CHECK(parse_records_tsv(text) == recs);
    CHECK_THROWS_AS(parse_records_tsv("bad\n"), Error);
  }

  TEST_CASE("region mean and penalty") {
    const auto items = corpus::generate_garden_path_items(corpus::default_lexicon().garden_path, 3, 5);
    const auto& amb = items[0];
    const auto& un = items[1];
    std::vector<double> sa(amb.tokens.size(), 9.0), su(un.tokens.size(), 9.0);
    sa[amb.region_start] = 1;
    sa[amb.region_start + 1] = 2;
    sa[amb.region_start + 2] = 3;
    CHECK(region_mean_surprisal(item_records(amb, sa), amb) == 2.0);
    for (std::size_t k = 0; k < 3; ++k) su[un.region_start + k] = sa[amb.region_start + k];
    const auto ra = item_records(amb, sa), ru = item_records(un, su);
    CHECK(disambiguation_penalty(ra, amb, ru, un) == 0.0);
    for (std::size_t k = 0; k < 3; ++k) {
      sa[amb.region_start + k] = 5.0;
      su[un.region_start + k] = 3.0;
    }
    const auto ra2 = item_records(amb, sa), ru2 = item_records(un, su);
    CHECK(disambiguation_penalty(ra2, amb, ru2, un) == 2.0);
    // Antisymmetric under swapping the roles.
    CHECK(disambiguation_penalty(ru2, un, ra2, amb) == -2.0);
    // Mismatched regions and unscored regions.
    CHECK_THROWS_AS(disambiguation_penalty(ra, amb, item_records(items[3], std::vector<double>(items[3].tokens.size(), 1.0)), items[3]),
                    Error);
    CHECK_THROWS_AS(region_mean_surprisal(std::span(ra).first(amb.region_start + 1), amb), Error);
  }

  TEST_CASE("region mean equals a brute-force re-extraction") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    const auto items = corpus::generate_garden_path_items(corpus::default_lexicon().garden_path, 20, 9);
    for (const auto& item : items) {
      std::vector<double> s(item.tokens.size());
      for (auto& v : s) v = u(rng);
      const auto recs = item_records(item, s);
      // Locate the region by searching for its words, not by region_start.
      const auto region = item.region();
      double brute = 0.0;
      std::size_t found = 0;
      for (std::size_t i = 0; i + region.size() <= item.tokens.size(); ++i) {
        if (std::equal(region.begin(), region.end(), item.tokens.begin() + static_cast<long>(i))) {
          for (std::size_t k = 0; k < region.size(); ++k) brute += s[i + k];
          ++found;
          break;
        }
      }
      REQUIRE(found == 1);
      CHECK(region_mean_surprisal(recs, item) == doctest::Approx(brute / 3.0).epsilon(1e-14));
    }
  }

  TEST_CASE("ols exact fits and failures") {
    const std::vector<double> x{1, 2, 3}, y{2, 4, 6};
    const auto r = ols_fit(Design::intercept_and("slope", x), y);
    CHECK(std::abs(r.coefficient("intercept")) < 1e-12);
    CHECK(r.coefficient("slope") == doctest::Approx(2.0).epsilon(1e-12));
    for (double e : r.residuals) CHECK(std::abs(e) < 1e-12);
    const auto c = ols_fit(Design::intercept_and("slope", std::vector<double>{1, 2, 3, 4}), std::vector<double>{5, 5, 5, 5});
    CHECK(std::abs(c.coefficient("slope")) < 1e-12);
    CHECK(c.coefficient("intercept") == doctest::Approx(5.0));
    Design d = Design::intercept_and("x", std::vector<double>{1, 2, 3, 4});
    d.add("twice_x", {2, 4, 6, 8});
    try {
      ols_fit(d, std::vector<double>{1, 2, 4, 3});
      FAIL("expected rank deficiency");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("twice_x") != std::string::npos);
    }
    CHECK_THROWS_AS(ols_fit(Design::intercept_and("x", std::vector<double>{1, 2}), std::vector<double>{1, 2}), Error);
    CHECK_THROWS_AS(r.coefficient("missing"), Error);
  }

  TEST_CASE("ols matches normal equations, residuals orthogonal, R^2 affine invariant") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 50;
      std::vector<double> x1(n), x2(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        x1[i] = g(rng);
        x2[i] = 3.0 * g(rng) + 1.0;
        y[i] = 0.5 - 1.5 * x1[i] + 0.25 * x2[i] + g(rng);
      }
      Design d = Design::intercept_and("x1", x1);
      d.add("x2", x2);
      const auto r = ols_fit(d, y);
      const auto beta = testutil::normal_equations(d.columns, y);
      for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(r.coefficients[k] - beta[k]) < 1e-8);
      for (const auto& col : d.columns) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += col[i] * r.residuals[i];
        CHECK(std::abs(dot) < 1e-8);
      }
      for (std::size_t k = 0; k < 3; ++k) CHECK(r.t_values[k] == doctest::Approx(r.coefficients[k] / r.standard_errors[k]));
      Design scaled = Design::intercept_and("x1", x1);
      std::vector<double> x2s(n);
      for (std::size_t i = 0; i < n; ++i) x2s[i] = -7.0 * x2[i] + 100.0;
      scaled.add("x2", x2s);
      CHECK(ols_fit(scaled, y).r_squared == doctest::Approx(r.r_squared).epsilon(1e-10));
    }
  }

  TEST_CASE("residualize by order") {
    const std::vector<double> order{1, 2, 3, 4, 5};
    for (double e : residualize_by_order(std::vector<double>{3, 5, 7, 9, 11}, order)) CHECK(std::abs(e) < 1e-12);
    const std::vector<double> v{2, 7, 1, 8, 2};
    std::vector<double> shifted = v;
    for (auto& s : shifted) s += 42.0;
    const auto a = residualize_by_order(v, order), b = residualize_by_order(shifted, order);
    for (std::size_t i = 0; i < 5; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    CHECK(std::abs(std::accumulate(a.begin(), a.end(), 0.0)) < 1e-9);
    CHECK_THROWS_AS(residualize_by_order(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
  }

  TEST_CASE("penalty trend") {
    std::vector<TrialValue> flat, planted, shifted;
    for (int list = 1; list <= 3; ++list) {
      for (int k = 1; k <= 10; ++k) {
        flat.push_back({list, double(k), 1.5, "ambiguous"});
        planted.push_back({list, double(k), 4.0 - 0.0625 * k, "ambiguous"});
        shifted.push_back({list, double(k), 4.0 - 0.0625 * k + (k * 7 % 3) * 0.1 + 10.0, "ambiguous"});
      }
    }
    CHECK(std::abs(penalty_trend(flat).coefficient("item_order")) < 1e-12);
    CHECK(penalty_trend(planted).coefficient("item_order") == doctest::Approx(-0.0625).epsilon(1e-9));
    auto unshifted = shifted;
    for (auto& t : unshifted) t.value -= 10.0;
    CHECK(penalty_trend(shifted).coefficient("item_order") ==
          doctest::Approx(penalty_trend(unshifted).coefficient("item_order")).epsilon(1e-10));
    std::vector<TrialValue> one_list(planted.begin(), planted.begin() + 10);
    CHECK_THROWS_AS(penalty_trend(one_list), Error);
  }

  TEST_CASE("LMEM table") {
    auto adaptive = stream({1.0, 2.0, 3.0, 4.0});
    auto non_adaptive = stream({1.5, 2.5, 3.5, 4.5});
    adaptive[2].is_unk = non_adaptive[2].is_unk = true;
    const auto t = build_lmem_table(adaptive, non_adaptive);
    CHECK(t.rows.size() == 3);
    CHECK(t.dropped_unk == 1);
    CHECK(build_lmem_table(adaptive, non_adaptive, {}, true).rows.size() == 4);
    for (const auto& row : t.rows) CHECK(row.adaptive->word_length == word_length(row.adaptive->token));
    const auto same = build_lmem_table(adaptive, adaptive, {}, true);
    for (const auto& row : same.rows) CHECK(row.adaptive->surprisal == row.non_adaptive_surprisal);
    auto misaligned = non_adaptive;
    misaligned[1].token = "other";
    try {
      build_lmem_table(adaptive, misaligned);
      FAIL("expected misalignment");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::data_invariant);
      CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
    CHECK_THROWS_AS(build_lmem_table(adaptive, stream({1.0})), Error);
    const auto tsv = format_lmem_tsv(t);
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 4);
  }

  TEST_CASE("plot CSV") {
    const std::vector<PlotPoint> pts{{1, 0.5, "ambiguous", "residual"}, {2, -0.25, "unambiguous", "residual"}};
    CHECK(format_plot_csv(pts) == "x,y,condition,series\n1,0.5,ambiguous,residual\n2,-0.25,unambiguous,residual\n");
  }

  TEST_CASE("format_number round-trips") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
      const double v = u(rng);
      CHECK(std::stod(format_number(v)) == v);
    }
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(std::nan("")) == "nan");
  }
}
