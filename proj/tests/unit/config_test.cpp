#include <evtrack/config.hpp>
#include <evtrack/error.hpp>

#include <gtest/gtest.h>

#include <set>
#include <string>

using namespace evtrack;

TEST(Config, EveryKeyDocumentedAndReadable) {
  const RunConfig config;
  std::set<std::string> seen;
  for (const ConfigKey& k : config_keys()) {
    EXPECT_TRUE(seen.insert(k.name).second) << k.name;
    EXPECT_FALSE(k.doc.empty()) << k.name;
    EXPECT_EQ(get_config_value(config, k.name), k.default_value) << k.name;
  }
  EXPECT_GT(seen.size(), 20u);
}

TEST(Config, UnknownKeyIsError) {
  RunConfig config;
  try {
    set_config_value(config, "gama", "0.3");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config);
  }
  EXPECT_THROW(apply_config_text(config, "bogus = 1\n"), Error);
}

TEST(Config, BadValueIsError) {
  RunConfig config;
  EXPECT_THROW(set_config_value(config, "events_per_fit", "twenty"), Error);
  EXPECT_THROW(set_config_value(config, "events_per_fit", "20x"), Error);
}

TEST(Config, TextAppliesWithComments) {
  RunConfig config;
  apply_config_text(config, "# comment\nevents_per_fit = 50  # trailing\n\nblink_lambda=2.5\n");
  EXPECT_EQ(config.tracker.fit.events_per_fit, 50);
  EXPECT_DOUBLE_EQ(config.blink.lambda, 2.5);
}

TEST(Config, DescribeRoundTrips) {
  RunConfig config;
  set_config_value(config, "gamma", "0.35");
  set_config_value(config, "gaze_degree", "3");
  RunConfig back;
  apply_config_text(back, describe_config(config));
  for (const ConfigKey& k : config_keys()) EXPECT_EQ(get_config_value(back, k.name), get_config_value(config, k.name));
}

TEST(Config, ValidateRejectsOutOfRange) {
  RunConfig config;
  set_config_value(config, "gamma_prime", "1.5");
  EXPECT_THROW(config.validate(), Error);
}
