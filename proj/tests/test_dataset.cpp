#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "semiae/dataset.hpp"
#include "semiae/errors.hpp"
#include "support/fixtures.hpp"

using namespace semiae;
using fixture::TempDir;
using fixture::write_text;

namespace {

int column(const SideInfoMatrix& m, const std::string& label) {
  const auto it = std::find(m.column_labels.begin(), m.column_labels.end(), label);
  REQUIRE(it != m.column_labels.end());
  return static_cast<int>(it - m.column_labels.begin());
}

RatingDataset sequential(int n) {
  std::vector<Rating> triples;
  for (int k = 0; k < n; ++k) triples.push_back({k % 7, k / 7, static_cast<double>(k % 5 + 1), k});
  return RatingDataset(7, (n + 6) / 7, triples);
}

}  // namespace

TEST_CASE("parse_ratings maps a MovieLens 100K line to a triple") {
  TempDir dir;
  const auto parsed = parse_ratings(write_text(dir / "u.data", "196\t242\t3\t881250949\n"),
                                    MovieLensFormat::kMl100k);
  REQUIRE(parsed.dataset.size() == 1);
  const Rating& r = parsed.dataset.triples()[0];
  CHECK(parsed.user_ids[static_cast<std::size_t>(r.user)] == 196);
  CHECK(parsed.item_ids[static_cast<std::size_t>(r.item)] == 242);
  CHECK(r.value == 3.0);
  CHECK(r.timestamp == 881250949);
}

TEST_CASE("parse_ratings counts users, items and ratings") {
  TempDir dir;
  const auto path = write_text(dir / "u.data", "10\t7\t5\t1\n10\t9\t1\t2\n20\t7\t4\t3\n20\t9\t2\t4\n");
  const auto parsed = parse_ratings(path, MovieLensFormat::kMl100k);
  CHECK(parsed.dataset.num_users() == 2);
  CHECK(parsed.dataset.num_items() == 2);
  CHECK(parsed.dataset.size() == 4);
  CHECK(parsed.user_ids == std::vector<long>{10, 20});
  CHECK(parsed.item_ids == std::vector<long>{7, 9});
}

TEST_CASE("parse_ratings reads the ML-1M separator") {
  TempDir dir;
  const auto parsed = parse_ratings(write_text(dir / "ratings.dat", "1::1193::5::978300760\n2::1193::4::978300761\n"),
                                    MovieLensFormat::kMl1m);
  CHECK(parsed.dataset.num_users() == 2);
  CHECK(parsed.dataset.num_items() == 1);
  CHECK(parsed.dataset.mean_rating() == doctest::Approx(4.5));
}

TEST_CASE("an empty ratings file gives an empty dataset that cannot be split") {
  TempDir dir;
  const auto parsed = parse_ratings(write_text(dir / "u.data", ""), MovieLensFormat::kMl100k);
  CHECK(parsed.dataset.empty());
  CHECK_THROWS_AS(split(parsed.dataset, 0.8, 1), DataError);
}

TEST_CASE("parse_ratings reports the offending line") {
  TempDir dir;
  SUBCASE("wrong field count") {
    const auto path = write_text(dir / "u.data", "1\t1\t5\t1\n1\t2\t5\n");
    try {
      parse_ratings(path, MovieLensFormat::kMl100k);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("rating out of range") {
    const auto path = write_text(dir / "u.data", "1\t1\t6\t1\n");
    CHECK_THROWS_AS(parse_ratings(path, MovieLensFormat::kMl100k), ParseError);
  }
  SUBCASE("duplicate pair names both lines") {
    const auto path = write_text(dir / "u.data", "1\t1\t5\t1\n2\t1\t3\t1\n1\t1\t4\t9\n");
    try {
      parse_ratings(path, MovieLensFormat::kMl100k);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
  }
  SUBCASE("non-numeric") {
    const auto path = write_text(dir / "u.data", "a\t1\t5\t1\n");
    CHECK_THROWS_AS(parse_ratings(path, MovieLensFormat::kMl100k), ParseError);
  }
}

TEST_CASE("user profile encoding for a 100K row") {
  TempDir dir;
  const auto m = parse_user_profiles(write_text(dir / "u.user", "1|24|M|technician|85711\n"),
                                     MovieLensFormat::kMl100k);
  REQUIRE(m.dim() == 30);
  REQUIRE(m.num_entities() == 1);
  const Eigen::VectorXd row = m.rows.row(0);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(30);
  expected[column(m, "gender=M")] = 1.0;
  expected[column(m, "occupation=technician")] = 1.0;
  expected[column(m, "age=18-24")] = 1.0;
  CHECK(row == expected);
  CHECK(column(m, "gender=F") == 0);
  CHECK(column(m, "gender=M") == 1);
  CHECK(m.entity_ids == std::vector<long>{1});
}

TEST_CASE("identical profile fields give identical rows") {
  TempDir dir;
  const auto m = parse_user_profiles(
      write_text(dir / "u.user", "1|30|F|writer|1\n2|30|F|writer|99999\n"), MovieLensFormat::kMl100k);
  CHECK(m.rows.row(0) == m.rows.row(1));
}

TEST_CASE("profile one-hot blocks each hold exactly one 1") {
  TempDir dir;
  const auto m = parse_user_profiles(
      write_text(dir / "u.user", "1|7|F|student|1\n2|18|M|none|2\n3|49|F|doctor|3\n4|56|M|retired|4\n"),
      MovieLensFormat::kMl100k);
  for (int r = 0; r < m.num_entities(); ++r) {
    CHECK(m.rows.row(r).segment(0, 2).sum() == 1.0);
    CHECK(m.rows.row(r).segment(2, 21).sum() == 1.0);
    CHECK(m.rows.row(r).segment(23, 7).sum() == 1.0);
  }
  CHECK(m.rows(0, column(m, "age=<18")) == 1.0);
  CHECK(m.rows(1, column(m, "age=18-24")) == 1.0);
  CHECK(m.rows(2, column(m, "age=45-49")) == 1.0);
  CHECK(m.rows(3, column(m, "age=56+")) == 1.0);
}

TEST_CASE("ML-1M age code 1 selects the first age bucket") {
  TempDir dir;
  const auto m = parse_user_profiles(write_text(dir / "users.dat", "1::F::1::10::48067\n"),
                                     MovieLensFormat::kMl1m);
  CHECK(m.rows(0, column(m, "age=<18")) == 1.0);
  CHECK(m.rows(0, column(m, "gender=F")) == 1.0);
  CHECK(m.rows(0, column(m, "occupation=K-12 student")) == 1.0);
  CHECK(m.rows.row(0).sum() == 3.0);
}

TEST_CASE("profile errors") {
  TempDir dir;
  SUBCASE("unknown occupation lists the vocabulary") {
    const auto path = write_text(dir / "u.user", "1|24|M|astronaut|85711\n");
    try {
      parse_user_profiles(path, MovieLensFormat::kMl100k);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("astronaut") != std::string::npos);
      CHECK(msg.find("technician") != std::string::npos);
    }
  }
  SUBCASE("non-positive age") {
    CHECK_THROWS_AS(parse_user_profiles(write_text(dir / "u.user", "1|0|M|writer|1\n"), MovieLensFormat::kMl100k),
                    ParseError);
  }
  SUBCASE("bad gender") {
    CHECK_THROWS_AS(parse_user_profiles(write_text(dir / "u.user", "1|20|X|writer|1\n"), MovieLensFormat::kMl100k),
                    ParseError);
  }
  SUBCASE("ML-1M occupation code out of range") {
    CHECK_THROWS_AS(parse_user_profiles(write_text(dir / "users.dat", "1::M::25::21::1\n"), MovieLensFormat::kMl1m),
                    ParseError);
  }
  SUBCASE("ML-1M age not a group code") {
    CHECK_THROWS_AS(parse_user_profiles(write_text(dir / "users.dat", "1::M::26::2::1\n"), MovieLensFormat::kMl1m),
                    ParseError);
  }
}

TEST_CASE("item features: genres {Action, Comedy} in 1995") {
  TempDir dir;
  const auto m = parse_item_features(write_text(dir / "movies.dat", "5::Some Film (1995)::Action|Comedy\n"),
                                     MovieLensFormat::kMl1m);
  REQUIRE(m.dim() == 19);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(19);
  expected[column(m, "genre=Action")] = 1.0;
  expected[column(m, "genre=Comedy")] = 1.0;
  expected[column(m, "year")] = 0.95;
  CHECK((m.rows.row(0).transpose() - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(m.missing_value_count == 0);
}

TEST_CASE("item features: 100K layout with the unknown genre") {
  TempDir dir;
  std::string flags;
  for (int g = 0; g < 19; ++g) flags += (g == 1 || g == 5) ? "|1" : "|0";
  const auto m = parse_item_features(
      write_text(dir / "u.item", "1|Toy Story (1995)|01-Jan-1995||http://x" + flags + "\n"),
      MovieLensFormat::kMl100k);
  REQUIRE(m.dim() == 20);
  CHECK(m.column_labels.front() == "genre=unknown");
  CHECK(m.rows(0, column(m, "genre=Action")) == 1.0);
  CHECK(m.rows(0, column(m, "genre=Comedy")) == 1.0);
  CHECK(m.rows(0, column(m, "year")) == doctest::Approx(0.95));
  CHECK(m.rows.row(0).head(19).sum() == 2.0);
}

TEST_CASE("item without genres or year is an all-zero row") {
  TempDir dir;
  const std::string flags = "|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0";
  const auto m = parse_item_features(write_text(dir / "u.item", "267|unknown|||" + flags + "\n"),
                                     MovieLensFormat::kMl100k);
  CHECK(m.rows.row(0).isZero());
  CHECK(m.missing_value_count == 1);
}

TEST_CASE("year endpoints differ only in the last column") {
  TempDir dir;
  const auto m = parse_item_features(write_text(dir / "movies.dat", "1::Old (1900)::Drama\n2::New (2000)::Drama\n"),
                                     MovieLensFormat::kMl1m);
  const Eigen::VectorXd diff = m.rows.row(1) - m.rows.row(0);
  CHECK(diff.head(18).isZero());
  CHECK(m.rows(0, 18) == 0.0);
  CHECK(m.rows(1, 18) == 1.0);
}

TEST_CASE("unknown ML-1M genre is an error") {
  TempDir dir;
  CHECK_THROWS_AS(parse_item_features(write_text(dir / "movies.dat", "1::X (1990)::Action|Space Opera\n"),
                                      MovieLensFormat::kMl1m),
                  ParseError);
}

TEST_CASE("split sizes and determinism") {
  SUBCASE("10 triples at 0.8") {
    const auto [train, test] = split(sequential(10), 0.8, 3);
    CHECK(train.size() == 8);
    CHECK(test.size() == 2);
  }
  SUBCASE("101 triples at 0.5 rounds half up") {
    const auto [train, test] = split(sequential(101), 0.5, 3);
    CHECK(train.size() == 51);
    CHECK(test.size() == 50);
  }
  SUBCASE("same seed, same partition; other seed, other partition") {
    const RatingDataset ds = sequential(60);
    CHECK(split(ds, 0.7, 42) == split(ds, 0.7, 42));
    CHECK(split(ds, 0.7, 42).first != split(ds, 0.7, 43).first);
  }
  SUBCASE("fractions outside (0,1)") {
    const RatingDataset ds = sequential(10);
    CHECK_THROWS_AS(split(ds, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(split(ds, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(split(ds, -0.5, 1), ConfigError);
  }
  SUBCASE("halves are sorted by (user, item)") {
    const auto [train, test] = split(sequential(40), 0.5, 9);
    for (const auto* half : {&train, &test}) {
      CHECK(std::is_sorted(half->triples().begin(), half->triples().end(), [](const Rating& a, const Rating& b) {
        return std::tie(a.user, a.item) < std::tie(b.user, b.item);
      }));
    }
  }
}

TEST_CASE("binarize keeps ratings strictly above the threshold") {
  const RatingDataset ds(1, 3, {{0, 0, 5, 0}, {0, 1, 4, 0}, {0, 2, 2, 0}});
  const RatingDataset liked = binarize(ds, 4.0);
  REQUIRE(liked.size() == 1);
  CHECK(liked.triples()[0] == Rating{0, 0, 1.0, 0});
  const RatingDataset all = binarize(ds, 0.0);
  CHECK(all.size() == 3);
  for (const Rating& r : all.triples()) CHECK(r.value == 1.0);
  CHECK(binarize(ds, 5.0).empty());
  CHECK(binarize(ds, 4.0, true).size() == 2);
}

TEST_CASE("build_vectors") {
  const RatingDataset ds(2, 2, {{0, 0, 5, 0}});
  const auto users = build_vectors(ds, Orientation::kUserBased);
  Eigen::MatrixXd values(2, 2);
  values << 5, 0, 0, 0;
  CHECK(users.values == values);
  CHECK(users.mask(0, 0));
  CHECK(users.mask.count() == 1);

  const auto items = build_vectors(ds, Orientation::kItemBased);
  CHECK(items.values == users.values.transpose());
  CHECK(items.mask == users.mask.transpose());

  std::vector<Rating> dense;
  for (int u = 0; u < 3; ++u) {
    for (int i = 0; i < 4; ++i) dense.push_back({u, i, 3.0, 0});
  }
  CHECK(build_vectors(RatingDataset(3, 4, dense), Orientation::kUserBased).mask.all());

  const RatingDataset asym(2, 3, {{1, 2, 4, 0}, {0, 1, 2, 0}});
  const auto a = build_vectors(asym, Orientation::kUserBased);
  const auto b = build_vectors(asym, Orientation::kItemBased);
  CHECK(a.values.rows() == 2);
  CHECK(a.values.cols() == 3);
  CHECK(b.values == a.values.transpose());
}

TEST_CASE("RatingDataset rejects invalid triples") {
  CHECK_THROWS_AS(RatingDataset(1, 1, {{0, 1, 3, 0}}), DataError);
  CHECK_THROWS_AS(RatingDataset(1, 1, {{0, 0, 7, 0}}), DataError);
  CHECK_THROWS_AS(RatingDataset(1, 2, {{0, 0, 3, 0}, {0, 0, 4, 0}}), DataError);
}

TEST_CASE("prepare_movielens aligns side information and round-trips through JSON") {
  TempDir dir;
  fixture::write_ml100k(dir / "raw");
  const PreparedData data = prepare_movielens(dir / "raw", MovieLensFormat::kMl100k);
  CHECK(data.ratings.num_users() == 6);
  CHECK(data.ratings.num_items() == 8);
  CHECK(data.ratings.size() == 30);
  CHECK(data.user_side.num_entities() == 6);
  CHECK(data.item_side.num_entities() == 8);
  CHECK(data.user_side.dim() == 30);
  CHECK(data.item_side.dim() == 20);
  CHECK(data.user_index(3) == 2);
  CHECK_THROWS_AS(data.item_index(99), DataError);

  save_prepared(data, dir / "prep.json");
  const PreparedData back = load_prepared(dir / "prep.json");
  CHECK(back.ratings == data.ratings);
  CHECK(back.user_side.rows == data.user_side.rows);
  CHECK(back.item_side.rows == data.item_side.rows);
  CHECK(back.user_side.column_labels == data.user_side.column_labels);
  CHECK(back.user_ids == data.user_ids);
  CHECK(back.item_ids == data.item_ids);
  CHECK(fixture::read_text(dir / "prep.json") == (save_prepared(back, dir / "again.json"), fixture::read_text(dir / "again.json")));
}

TEST_CASE("prepare_movielens on an empty directory names the expected files") {
  TempDir dir;
  std::filesystem::create_directories(dir / "empty");
  try {
    prepare_movielens(dir / "empty", MovieLensFormat::kMl100k);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    for (const auto& name : expected_files(MovieLensFormat::kMl100k)) CHECK(msg.find(name) != std::string::npos);
  }
}
