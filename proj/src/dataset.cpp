#include "semiae/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <random>
#include <tuple>
#include <unordered_map>

#include "semiae/errors.hpp"
#include "text.hpp"

namespace semiae {

namespace {

using detail::join;
using detail::split_fields;
using detail::to_number;
using detail::trim;

constexpr std::array<const char*, 19> kGenres100k = {
    "unknown", "Action",   "Adventure", "Animation", "Children's", "Comedy",  "Crime",
    "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",    "Musical", "Mystery",
    "Romance", "Sci-Fi",   "Thriller",  "War",       "Western"};

constexpr std::array<const char*, 18> kGenres1m = {
    "Action",  "Adventure", "Animation", "Children's", "Comedy",  "Crime",
    "Documentary", "Drama", "Fantasy",  "Film-Noir",  "Horror",  "Musical",
    "Mystery", "Romance",   "Sci-Fi",    "Thriller",   "War",     "Western"};

// u.occupation as shipped with ML-100K.
constexpr std::array<const char*, 21> kOccupations100k = {
    "administrator", "artist",    "doctor",     "educator",  "engineer",  "entertainment",
    "executive",     "healthcare", "homemaker", "lawyer",    "librarian", "marketing",
    "none",          "other",     "programmer", "retired",   "salesman",  "scientist",
    "student",       "technician", "writer"};

// ML-1M README occupation codes 0..20.
constexpr std::array<const char*, 21> kOccupations1m = {
    "other",          "academic/educator", "artist",          "clerical/admin",
    "college/grad student", "customer service", "doctor/health care",
    "executive/managerial", "farmer",      "homemaker",       "K-12 student",
    "lawyer",         "programmer",        "retired",         "sales/marketing",
    "scientist",      "self-employed",     "technician/engineer",
    "tradesman/craftsman", "unemployed",   "writer"};

constexpr std::array<const char*, 7> kAgeBuckets = {"<18",   "18-24", "25-34", "35-44",
                                                    "45-49", "50-55", "56+"};
constexpr std::array<int, 7> kAgeCodes1m = {1, 18, 25, 35, 45, 50, 56};

constexpr int kProfileDim = 2 + 21 + 7;

int age_bucket(int age) {
  if (age < 18) return 0;
  if (age < 25) return 1;
  if (age < 35) return 2;
  if (age < 45) return 3;
  if (age < 50) return 4;
  if (age < 56) return 5;
  return 6;
}

double year_scalar(int year) { return std::clamp((year - 1900) / 100.0, 0.0, 1.0); }

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

template <std::size_t N>
int index_of(const std::array<const char*, N>& vocab, std::string_view word) {
  for (std::size_t i = 0; i < N; ++i) {
    if (word == vocab[i]) return static_cast<int>(i);
  }
  return -1;
}

template <std::size_t N>
std::string vocabulary(const std::array<const char*, N>& vocab) {
  return join(std::vector<std::string>(vocab.begin(), vocab.end()), ", ");
}

std::vector<std::string> profile_labels(MovieLensFormat format) {
  std::vector<std::string> labels = {"gender=F", "gender=M"};
  if (format == MovieLensFormat::kMl100k) {
    for (const char* o : kOccupations100k) labels.push_back(std::string("occupation=") + o);
  } else {
    for (const char* o : kOccupations1m) labels.push_back(std::string("occupation=") + o);
  }
  for (const char* a : kAgeBuckets) labels.push_back(std::string("age=") + a);
  return labels;
}

// Reads non-blank lines, handing each to `fn(line, line_number)`.
template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_or_throw(path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    fn(std::string_view(line), number);
  }
}

std::int64_t pair_key(int user, int item) {
  return (static_cast<std::int64_t>(user) << 32) | static_cast<std::uint32_t>(item);
}

}  // namespace

MovieLensFormat parse_format(std::string_view name) {
  if (name == "ml-100k") return MovieLensFormat::kMl100k;
  if (name == "ml-1m") return MovieLensFormat::kMl1m;
  throw ConfigError("unknown dataset format '" + std::string(name) + "' (expected ml-100k or ml-1m)");
}

std::string to_string(MovieLensFormat format) {
  return format == MovieLensFormat::kMl100k ? "ml-100k" : "ml-1m";
}

std::string to_string(Orientation orientation) {
  return orientation == Orientation::kUserBased ? "user-based" : "item-based";
}

RatingDataset::RatingDataset(int num_users, int num_items, std::vector<Rating> triples,
                             RatingScale scale)
    : num_users_(num_users), num_items_(num_items), triples_(std::move(triples)), scale_(scale) {
  if (num_users < 0 || num_items < 0) throw DataError("negative dataset dimensions");
  std::vector<std::int64_t> keys;
  keys.reserve(triples_.size());
  for (const Rating& r : triples_) {
    if (r.user < 0 || r.user >= num_users_ || r.item < 0 || r.item >= num_items_) {
      throw DataError("rating (" + std::to_string(r.user) + ", " + std::to_string(r.item) +
                      ") outside a " + std::to_string(num_users_) + "x" +
                      std::to_string(num_items_) + " matrix");
    }
    if (!std::isfinite(r.value) || r.value < scale_.min || r.value > scale_.max) {
      throw DataError("rating value " + std::to_string(r.value) + " outside the scale");
    }
    keys.push_back(pair_key(r.user, r.item));
  }
  std::sort(keys.begin(), keys.end());
  const auto dup = std::adjacent_find(keys.begin(), keys.end());
  if (dup != keys.end()) {
    throw DataError("duplicate rating for user " + std::to_string(*dup >> 32) + ", item " +
                    std::to_string(*dup & 0xffffffff));
  }
}

double RatingDataset::mean_rating() const {
  if (triples_.empty()) return 0.0;
  double sum = 0.0;
  for (const Rating& r : triples_) sum += r.value;
  return sum / static_cast<double>(triples_.size());
}

std::vector<std::vector<int>> RatingDataset::items_by_user() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(num_users_));
  for (const Rating& r : triples_) out[static_cast<std::size_t>(r.user)].push_back(r.item);
  for (auto& items : out) std::sort(items.begin(), items.end());
  return out;
}

SideInfoMatrix SideInfoMatrix::empty(int num_entities) {
  SideInfoMatrix m;
  m.rows = Eigen::MatrixXd::Zero(num_entities, 0);
  return m;
}

SideInfoMatrix SideInfoMatrix::aligned_to(const std::vector<long>& ids) const {
  std::unordered_map<long, int> where;
  for (std::size_t i = 0; i < entity_ids.size(); ++i) where.emplace(entity_ids[i], static_cast<int>(i));
  SideInfoMatrix out;
  out.rows.resize(static_cast<Eigen::Index>(ids.size()), rows.cols());
  out.column_labels = column_labels;
  out.entity_ids = ids;
  out.missing_value_count = missing_value_count;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = where.find(ids[i]);
    if (it == where.end()) throw DataError("no side information for id " + std::to_string(ids[i]));
    out.rows.row(static_cast<Eigen::Index>(i)) = rows.row(it->second);
  }
  return out;
}

ParsedRatings parse_ratings(const std::filesystem::path& path, MovieLensFormat format) {
  struct RawRating {
    long user;
    long item;
    double value;
    std::int64_t timestamp;
    std::size_t line;
  };
  std::vector<RawRating> raw;
  const std::string_view delim = format == MovieLensFormat::kMl100k ? "\t" : "::";
  const std::string file = path.string();

  for_each_line(path, [&](std::string_view line, std::size_t number) {
    const auto fields = split_fields(line, delim);
    if (fields.size() != 4) {
      throw ParseError(file, number, "expected 4 fields, found " + std::to_string(fields.size()));
    }
    const auto user = to_number<long>(fields[0]);
    const auto item = to_number<long>(fields[1]);
    const auto value = to_number<double>(fields[2]);
    const auto stamp = to_number<std::int64_t>(fields[3]);
    if (!user || !item || !value || !stamp) throw ParseError(file, number, "non-numeric field");
    if (*value < 1.0 || *value > 5.0) {
      throw ParseError(file, number, "rating " + std::string(trim(fields[2])) + " outside [1,5]");
    }
    raw.push_back({*user, *item, *value, *stamp, number});
  });

  ParsedRatings out;
  for (const auto& r : raw) {
    out.user_ids.push_back(r.user);
    out.item_ids.push_back(r.item);
  }
  for (auto* ids : {&out.user_ids, &out.item_ids}) {
    std::sort(ids->begin(), ids->end());
    ids->erase(std::unique(ids->begin(), ids->end()), ids->end());
  }
  std::unordered_map<long, int> user_index;
  std::unordered_map<long, int> item_index;
  for (std::size_t i = 0; i < out.user_ids.size(); ++i) user_index[out.user_ids[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < out.item_ids.size(); ++i) item_index[out.item_ids[i]] = static_cast<int>(i);

  std::vector<Rating> triples;
  triples.reserve(raw.size());
  std::unordered_map<std::int64_t, std::size_t> seen;
  for (const auto& r : raw) {
    const Rating t{user_index[r.user], item_index[r.item], r.value, r.timestamp};
    const auto [it, inserted] = seen.emplace(pair_key(t.user, t.item), r.line);
    if (!inserted) {
      throw ParseError(file, r.line,
                       "duplicate rating for user " + std::to_string(r.user) + ", item " +
                           std::to_string(r.item) + " (first seen on line " +
                           std::to_string(it->second) + ")");
    }
    triples.push_back(t);
  }
  out.dataset = RatingDataset(static_cast<int>(out.user_ids.size()),
                              static_cast<int>(out.item_ids.size()), std::move(triples));
  return out;
}

SideInfoMatrix parse_user_profiles(const std::filesystem::path& path, MovieLensFormat format) {
  const std::string file = path.string();
  std::vector<std::pair<long, Eigen::VectorXd>> rows;

  for_each_line(path, [&](std::string_view line, std::size_t number) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(kProfileDim);
    std::string_view gender;
    int occupation = -1;
    int bucket = -1;
    std::optional<long> id;

    if (format == MovieLensFormat::kMl100k) {
      const auto f = split_fields(line, "|");
      if (f.size() != 5) throw ParseError(file, number, "expected id|age|gender|occupation|zip");
      id = to_number<long>(f[0]);
      const auto age = to_number<int>(f[1]);
      if (!id || !age) throw ParseError(file, number, "non-numeric id or age");
      if (*age <= 0) throw ParseError(file, number, "age must be positive");
      gender = trim(f[2]);
      occupation = index_of(kOccupations100k, trim(f[3]));
      if (occupation < 0) {
        throw ParseError(file, number,
                         "unknown occupation '" + std::string(trim(f[3])) +
                             "'; valid: " + vocabulary(kOccupations100k));
      }
      bucket = age_bucket(*age);
    } else {
      const auto f = split_fields(line, "::");
      if (f.size() != 5) throw ParseError(file, number, "expected id::gender::age::occupation::zip");
      id = to_number<long>(f[0]);
      const auto age = to_number<int>(f[2]);
      const auto code = to_number<int>(f[3]);
      if (!id || !age || !code) throw ParseError(file, number, "non-numeric id, age or occupation");
      if (*age <= 0) throw ParseError(file, number, "age must be positive");
      gender = trim(f[1]);
      const auto* hit = std::find(kAgeCodes1m.begin(), kAgeCodes1m.end(), *age);
      if (hit == kAgeCodes1m.end()) throw ParseError(file, number, "age code " + std::to_string(*age) + " is not an ML-1M age group");
      bucket = static_cast<int>(hit - kAgeCodes1m.begin());
      if (*code < 0 || *code >= static_cast<int>(kOccupations1m.size())) {
        throw ParseError(file, number,
                         "unknown occupation code " + std::to_string(*code) +
                             "; valid: 0..20 (" + vocabulary(kOccupations1m) + ")");
      }
      occupation = *code;
    }

    if (gender == "F") {
      row[0] = 1.0;
    } else if (gender == "M") {
      row[1] = 1.0;
    } else {
      throw ParseError(file, number, "gender must be F or M");
    }
    row[2 + occupation] = 1.0;
    row[2 + 21 + bucket] = 1.0;
    rows.emplace_back(*id, std::move(row));
  });

  SideInfoMatrix out;
  out.column_labels = profile_labels(format);
  out.rows.resize(static_cast<Eigen::Index>(rows.size()), kProfileDim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.entity_ids.push_back(rows[i].first);
    out.rows.row(static_cast<Eigen::Index>(i)) = rows[i].second.transpose();
  }
  return out;
}

SideInfoMatrix parse_item_features(const std::filesystem::path& path, MovieLensFormat format) {
  const std::string file = path.string();
  const bool is100k = format == MovieLensFormat::kMl100k;
  const int genres = is100k ? static_cast<int>(kGenres100k.size()) : static_cast<int>(kGenres1m.size());
  const int dim = genres + 1;

  SideInfoMatrix out;
  std::vector<Eigen::VectorXd> rows;

  for_each_line(path, [&](std::string_view line, std::size_t number) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
    std::optional<long> id;
    std::optional<int> year;

    if (is100k) {
      const auto f = split_fields(line, "|");
      if (f.size() < 5 + kGenres100k.size()) {
        throw ParseError(file, number, "expected 5 leading fields and 19 genre flags");
      }
      id = to_number<long>(f[0]);
      if (!id) throw ParseError(file, number, "non-numeric movie id");
      const auto date = trim(f[2]);
      if (date.size() >= 4) year = to_number<int>(date.substr(date.size() - 4));
      const std::size_t first_flag = f.size() - kGenres100k.size();
      for (int g = 0; g < genres; ++g) {
        const auto flag = trim(f[first_flag + static_cast<std::size_t>(g)]);
        if (flag == "1") {
          row[g] = 1.0;
        } else if (flag != "0") {
          throw ParseError(file, number, "genre flag must be 0 or 1");
        }
      }
    } else {
      const auto f = split_fields(line, "::");
      if (f.size() != 3) throw ParseError(file, number, "expected id::title::genres");
      id = to_number<long>(f[0]);
      if (!id) throw ParseError(file, number, "non-numeric movie id");
      const auto title = trim(f[1]);
      const auto open = title.rfind('(');
      if (open != std::string_view::npos && open + 6 <= title.size() && title[open + 5] == ')') {
        year = to_number<int>(title.substr(open + 1, 4));
      }
      const auto names = trim(f[2]);
      if (!names.empty()) {
        for (const auto name : split_fields(names, "|")) {
          const int g = index_of(kGenres1m, trim(name));
          if (g < 0) {
            throw ParseError(file, number,
                             "unknown genre '" + std::string(name) + "'; valid: " + vocabulary(kGenres1m));
          }
          row[g] = 1.0;
        }
      }
    }

    if (year) {
      row[genres] = year_scalar(*year);
    } else {
      ++out.missing_value_count;
    }
    out.entity_ids.push_back(*id);
    rows.push_back(std::move(row));
  });

  for (int g = 0; g < genres; ++g) {
    out.column_labels.push_back(std::string("genre=") + (is100k ? kGenres100k[g] : kGenres1m[g]));
  }
  out.column_labels.emplace_back("year");
  out.rows.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) out.rows.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return out;
}

std::pair<RatingDataset, RatingDataset> split(const RatingDataset& ds, double train_fraction,
                                              std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0,1), got " + std::to_string(train_fraction));
  }
  if (ds.size() < 2) throw DataError("cannot split fewer than 2 ratings");

  std::vector<Rating> shuffled = ds.triples();
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  const auto n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(ds.size()) + 0.5));
  const auto by_position = [](const Rating& a, const Rating& b) {
    return std::tie(a.user, a.item) < std::tie(b.user, b.item);
  };
  std::vector<Rating> train(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<Rating> test(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train), shuffled.end());
  std::sort(train.begin(), train.end(), by_position);
  std::sort(test.begin(), test.end(), by_position);
  return {RatingDataset(ds.num_users(), ds.num_items(), std::move(train), ds.scale()),
          RatingDataset(ds.num_users(), ds.num_items(), std::move(test), ds.scale())};
}

RatingDataset binarize(const RatingDataset& ds, double threshold, bool inclusive) {
  std::vector<Rating> liked;
  for (const Rating& r : ds.triples()) {
    if (inclusive ? r.value >= threshold : r.value > threshold) {
      Rating b = r;
      b.value = 1.0;
      liked.push_back(b);
    }
  }
  return RatingDataset(ds.num_users(), ds.num_items(), std::move(liked), RatingScale{0.0, 1.0});
}

InteractionVectors build_vectors(const RatingDataset& ds, Orientation orientation) {
  const bool by_user = orientation == Orientation::kUserBased;
  const int rows = by_user ? ds.num_users() : ds.num_items();
  const int cols = by_user ? ds.num_items() : ds.num_users();
  InteractionVectors out;
  out.orientation = orientation;
  out.values = Eigen::MatrixXd::Zero(rows, cols);
  out.mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rows, cols, false);
  for (const Rating& r : ds.triples()) {
    const int i = by_user ? r.user : r.item;
    const int j = by_user ? r.item : r.user;
    out.values(i, j) = r.value;
    out.mask(i, j) = true;
  }
  return out;
}

int PreparedData::user_index(long raw_id) const {
  const auto it = std::lower_bound(user_ids.begin(), user_ids.end(), raw_id);
  if (it == user_ids.end() || *it != raw_id) throw DataError("unknown user id " + std::to_string(raw_id));
  return static_cast<int>(it - user_ids.begin());
}

int PreparedData::item_index(long raw_id) const {
  const auto it = std::lower_bound(item_ids.begin(), item_ids.end(), raw_id);
  if (it == item_ids.end() || *it != raw_id) throw DataError("unknown item id " + std::to_string(raw_id));
  return static_cast<int>(it - item_ids.begin());
}

std::vector<std::string> expected_files(MovieLensFormat format) {
  if (format == MovieLensFormat::kMl100k) return {"u.data", "u.user", "u.item"};
  return {"ratings.dat", "users.dat", "movies.dat"};
}

PreparedData prepare_movielens(const std::filesystem::path& raw_dir, MovieLensFormat format) {
  const auto files = expected_files(format);
  std::vector<std::string> missing;
  for (const auto& name : files) {
    if (!std::filesystem::is_regular_file(raw_dir / name)) missing.push_back(name);
  }
  if (!missing.empty()) {
    throw DataError(raw_dir.string() + " is missing " + join(missing, ", ") + " (a " +
                    to_string(format) + " directory holds " + join(files, ", ") + ")");
  }

  auto parsed = parse_ratings(raw_dir / files[0], format);
  PreparedData out;
  out.format = format;
  out.ratings = std::move(parsed.dataset);
  out.user_ids = std::move(parsed.user_ids);
  out.item_ids = std::move(parsed.item_ids);
  out.user_side = parse_user_profiles(raw_dir / files[1], format).aligned_to(out.user_ids);
  out.item_side = parse_item_features(raw_dir / files[2], format).aligned_to(out.item_ids);
  return out;
}

namespace {

nlohmann::json side_to_json(const SideInfoMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.rows.cols(); ++j) row.push_back(m.rows(i, j));
    rows.push_back(std::move(row));
  }
  return {{"dim", m.dim()},
          {"column_labels", m.column_labels},
          {"missing_value_count", m.missing_value_count},
          {"rows", std::move(rows)}};
}

SideInfoMatrix side_from_json(const nlohmann::json& j, const std::vector<long>& ids) {
  SideInfoMatrix m;
  const int dim = j.at("dim").get<int>();
  const auto& rows = j.at("rows");
  m.column_labels = j.at("column_labels").get<std::vector<std::string>>();
  m.missing_value_count = j.value("missing_value_count", std::size_t{0});
  m.entity_ids = ids;
  m.rows.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<std::size_t>(dim)) throw DataError("side information row has wrong width");
    for (int k = 0; k < dim; ++k) m.rows(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const PreparedData& data) {
  nlohmann::json triples = nlohmann::json::array();
  for (const Rating& r : data.ratings.triples()) triples.push_back({r.user, r.item, r.value, r.timestamp});
  return {{"schema_version", kPreparedSchemaVersion},
          {"format", to_string(data.format)},
          {"num_users", data.ratings.num_users()},
          {"num_items", data.ratings.num_items()},
          {"triples", std::move(triples)},
          {"user_side_info", side_to_json(data.user_side)},
          {"item_side_info", side_to_json(data.item_side)},
          {"id_maps", {{"users", data.user_ids}, {"items", data.item_ids}}}};
}

PreparedData prepared_from_json(const nlohmann::json& doc) {
  const int version = doc.at("schema_version").get<int>();
  if (version != kPreparedSchemaVersion) {
    throw DataError("unsupported prepared-dataset schema_version " + std::to_string(version));
  }
  PreparedData out;
  out.format = parse_format(doc.at("format").get<std::string>());
  out.user_ids = doc.at("id_maps").at("users").get<std::vector<long>>();
  out.item_ids = doc.at("id_maps").at("items").get<std::vector<long>>();
  std::vector<Rating> triples;
  triples.reserve(doc.at("triples").size());
  for (const auto& t : doc.at("triples")) {
    triples.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<double>(), t.at(3).get<std::int64_t>()});
  }
  out.ratings = RatingDataset(doc.at("num_users").get<int>(), doc.at("num_items").get<int>(), std::move(triples));
  out.user_side = side_from_json(doc.at("user_side_info"), out.user_ids);
  out.item_side = side_from_json(doc.at("item_side_info"), out.item_ids);
  if (out.user_side.num_entities() != out.ratings.num_users() ||
      out.item_side.num_entities() != out.ratings.num_items()) {
    throw DataError("side information row count does not match the rating dimensions");
  }
  return out;
}

void save_prepared(const PreparedData& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(data).dump() << '\n';
}

PreparedData load_prepared(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return prepared_from_json(doc);
}

}  // namespace semiae
