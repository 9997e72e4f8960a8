#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "lbcf/errors.h"
#include "lbcf/model_schema.h"
#include "lbcf/panel.h"
#include "test_util.h"

using namespace lbcf;

namespace {

std::size_t observed_at(const PanelDataset& d, int t) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < d.subjects(); ++i) n += d.observed(i, t);
  return n;
}

const Covariate& cov(const PanelDataset& d, const std::string& header) {
  const Covariate* c = d.find_covariate(header);
  if (!c) throw std::runtime_error("no covariate " + header);
  return *c;
}

}  // namespace

TEST(Ingest, FullTwoWavePanel) {
  const PanelDataset d = panel_from_text("id,y.1,y.2,z.2,x.a.1\np,1.5,2.5,1,0.3\nq,0.5,1.0,0,0.7\n");
  EXPECT_EQ(d.subjects(), 2u);
  EXPECT_EQ(d.waves, 2);
  EXPECT_EQ(observed_at(d, 1), 2u);
  EXPECT_EQ(observed_at(d, 2), 2u);
  EXPECT_EQ(d.treatment(0, 2), 1);
  EXPECT_EQ(d.weights, (std::vector<double>{1.0, 1.0}));
  EXPECT_DOUBLE_EQ(cov(d, "x.a.1").values[1], 0.7);
}

TEST(Ingest, DropoutSubjectIsRetained) {
  const PanelDataset d = panel_from_text("id,y.1,y.2,z.2\np,1,,NA\nq,2,3,1\nr,0,1,0\n");
  EXPECT_EQ(d.subjects(), 3u);
  EXPECT_EQ(d.last_wave(0), 1);
  EXPECT_EQ(d.last_wave(1), 2);
  EXPECT_EQ(d.observed_count(), 5u);
}

TEST(Ingest, MissingTreatmentIsMasked) {
  const PanelDataset d = panel_from_text("id,y.1,y.2,z.2\np,1,2,NA\nq,2,3,1\n");
  EXPECT_EQ(d.treatment(0, 2), kMissingTreatment);
  EXPECT_EQ(d.treatment(1, 2), 1);
}

TEST(Ingest, BrokenInputIsRejected) {
  EXPECT_THROW(panel_from_text("id,y.1,y.2,y.3,z.2,z.3\np,1,,3,0,0\n"), ValidationError);  // non-monotone
  EXPECT_THROW(panel_from_text("id,y.1,y.2,z.2\np,1,2,0\np,1,2,1\n"), ValidationError);     // duplicate id
  EXPECT_THROW(panel_from_text("id,y.1,y.2,z.2\np,1,2,2\n"), ParseError);                   // bad treatment
  EXPECT_THROW(panel_from_text("id,y.1,y.2,z.2,weight\np,1,2,0,-1\n"), ValidationError);    // negative weight
  EXPECT_THROW(panel_from_text("id,y.1,y.2\np,1,2\n"), SchemaError);                         // no z.2
  EXPECT_THROW(panel_from_text("id,y.1,z.2\np,1,0\n"), SchemaError);                         // z beyond waves
  EXPECT_THROW(panel_from_text("id,y.1,y.2,z.2\np,1,abc,0\n"), ParseError);
}

TEST(Ingest, ParseErrorsCarryRowAndColumn) {
  try {
    panel_from_text("id,y.1,y.2,z.2\np,1,2,0\nq,1,oops,1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.column(), "y.2");
    EXPECT_GT(e.row(), 0);
  }
}

TEST(Ingest, RoundTripIsLossless) {
  const std::string text =
      "id,y.1,y.2,y.3,z.2,z.3,x.a.1,x.g.1,x.b.2,weight,pv.1.y.1,pv.1.y.2,pv.1.y.3,ps.2\n"
      "s1,0.1,0.30000000000000004,1e-300,1,0,3.5,red,NA,2.5,0.2,0.4,1.5,0.25\n"
      "s2,-7,12345.678,,0,NA,NA,blue,4,1,-6,12000,,0.75\n";
  const PanelDataset d = panel_from_text(text);
  std::ostringstream out;
  write_csv(d, out, {"note"});
  const PanelDataset back = panel_from_text(out.str());
  ASSERT_EQ(back.ids, d.ids);
  for (std::size_t k = 0; k < d.y.size(); ++k) {
    if (std::isnan(d.y[k])) {
      EXPECT_TRUE(std::isnan(back.y[k]));
    } else {
      EXPECT_EQ(back.y[k], d.y[k]);
    }
  }
  EXPECT_EQ(back.z, d.z);
  EXPECT_EQ(back.weights, d.weights);
  EXPECT_EQ(back.supplied_propensity, d.supplied_propensity);
  EXPECT_EQ(cov(back, "x.g.1").levels, cov(d, "x.g.1").levels);
  EXPECT_EQ(cov(back, "x.g.1").codes, cov(d, "x.g.1").codes);
  EXPECT_EQ(cov(back, "x.a.1").values[0], 3.5);
  EXPECT_EQ(out.str().rfind("# note\n", 0), 0u);
}

TEST(Ingest, SchemaSpecOverridesTypesAndNames) {
  SchemaSpec spec;
  spec.id_column = "student";
  spec.weight_column = "w";
  spec.types["x.code.1"] = ColumnType::Categorical;
  const PanelDataset d = panel_from_text("student,y.1,y.2,z.2,x.code.1,w\na,1,2,0,10,3\nb,2,3,1,20,1\n", spec);
  EXPECT_EQ(d.ids, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.weights, (std::vector<double>{3.0, 1.0}));
  EXPECT_EQ(cov(d, "x.code.1").type, ColumnType::Categorical);
}

TEST(Standardize, TextbookExample) {
  const PanelDataset d = panel_from_text("id,y.1\na,1\nb,2\nc,3\n");
  const auto [s, st] = standardize_outcomes(d);
  EXPECT_DOUBLE_EQ(st.mean, 2.0);
  EXPECT_DOUBLE_EQ(st.sd, 1.0);
  EXPECT_EQ(s.y, (std::vector<double>{-1.0, 0.0, 1.0}));
  EXPECT_DOUBLE_EQ(st.destandardize(1.0), 3.0);
  EXPECT_DOUBLE_EQ(st.rescale(1.0), 1.0);
}

TEST(Standardize, NormalSampleIsNearlyUnchanged) {
  Rng rng(3);
  std::ostringstream csv;
  csv << "id,y.1\n";
  for (int i = 0; i < 20000; ++i) csv << i << ',' << rng.normal() << '\n';
  const Standardizer st = fit_standardizer(panel_from_text(csv.str()));
  EXPECT_NEAR(st.mean, 0.0, 0.03);
  EXPECT_NEAR(st.sd, 1.0, 0.03);
}

TEST(Standardize, ConstantOutcomeIsAnError) {
  EXPECT_THROW(fit_standardizer(panel_from_text("id,y.1,y.2,z.2\na,4,4,0\nb,4,4,1\n")), ValidationError);
}

TEST(PlausibleValues, OneViewPerReplicate) {
  std::ostringstream csv;
  csv << "id,y.1,y.2,z.2";
  for (int k = 1; k <= 5; ++k) csv << ",pv." << k << ".y.1,pv." << k << ".y.2";
  csv << "\n";
  for (int i = 0; i < 4; ++i) {
    csv << i << ",1," << (i == 3 ? "" : "2") << "," << i % 2;
    for (int k = 1; k <= 5; ++k) csv << "," << k << "," << (i == 3 ? "" : std::to_string(k + 1));
    csv << "\n";
  }
  const PanelDataset d = panel_from_text(csv.str());
  const auto views = plausible_value_views(d);
  ASSERT_EQ(views.size(), 5u);
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(views[k].replicate, k + 1);
    EXPECT_EQ(views[k].outcome(0, 1), k + 1.0);
    EXPECT_TRUE(views[k].plausible_values.empty());
  }
}

TEST(PlausibleValues, SingleReplicateEqualToBaseIsTheBase) {
  const PanelDataset d = panel_from_text("id,y.1,y.2,z.2,pv.1.y.1,pv.1.y.2\na,1,2,0,1,2\nb,3,4,1,3,4\n");
  const auto views = plausible_value_views(d);
  ASSERT_EQ(views.size(), 1u);
  EXPECT_EQ(views[0].y, d.y);
  EXPECT_EQ(views[0].z, d.z);
  EXPECT_EQ(views[0].ids, d.ids);
}

TEST(PlausibleValues, ExtraObservedCellIsAnError) {
  EXPECT_THROW(panel_from_text("id,y.1,y.2,z.2,pv.1.y.1,pv.1.y.2\na,1,,NA,1,2\nb,3,4,1,3,4\n"), ValidationError);
  EXPECT_THROW(plausible_value_views(panel_from_text("id,y.1,y.2,z.2\na,1,2,0\n")), ValidationError);
}

TEST(Design, UnseenCategoryBecomesZeroRowWithWarning) {
  const PanelDataset train = panel_from_text("id,y.1,y.2,z.2,x.g.1\na,1,2,0,red\nb,2,3,1,blue\nc,0,1,1,red\n");
  const ModelSchema schema = make_schema(train);
  const BlockSchema& mu = schema.block(ForestKind::Mu, 1);
  const DesignMatrix xt = build_design(mu, schema, train, {});
  const PanelDataset fresh = panel_from_text("id,y.1,y.2,z.2,x.g.1\nd,NA,NA,NA,green\ne,NA,NA,NA,blue\n");
  std::vector<std::string> warnings;
  const DesignMatrix xf = build_design(mu, schema, fresh, {}, &warnings);
  ASSERT_EQ(xf.cols(), xt.cols());
  for (std::size_t c = 0; c < xf.cols(); ++c) EXPECT_EQ(xf(0, c), 0.0);
  double ones = 0.0;
  for (std::size_t c = 0; c < xf.cols(); ++c) ones += xf(1, c);
  EXPECT_EQ(ones, 1.0);
  EXPECT_FALSE(warnings.empty());
}

TEST(Design, BlocksSeeOnlyPastInformation) {
  const PanelDataset d = panel_from_text(
      "id,y.1,y.2,y.3,z.2,z.3,x.a.1,x.b.3\n"
      "p,1,2,3,0,1,0.5,1\nq,2,3,4,1,0,0.1,2\nr,0,1,2,1,1,0.9,3\n");
  const ModelSchema s = make_schema(d);
  auto has = [](const BlockSchema& b, const std::string& name) {
    const auto names = b.column_names();
    return std::find(names.begin(), names.end(), name) != names.end();
  };
  const BlockSchema& mu = s.block(ForestKind::Mu, 1);
  const BlockSchema& d2 = s.block(ForestKind::Delta, 2);
  const BlockSchema& t3 = s.block(ForestKind::Tau, 3);
  EXPECT_TRUE(has(mu, "x.a.1"));
  EXPECT_FALSE(has(mu, "x.b.3"));
  EXPECT_FALSE(has(d2, "x.b.3"));
  EXPECT_TRUE(has(t3, "x.b.3"));
  for (const auto& c : d2.columns) {
    if (c.source == DesignColumn::Source::PriorOutcome) EXPECT_LT(c.wave, 2);
    if (c.source == DesignColumn::Source::PriorTreatment) EXPECT_LT(c.wave, 2);
  }
  bool t3_sees_z2 = false;
  for (const auto& c : t3.columns) t3_sees_z2 |= c.source == DesignColumn::Source::PriorTreatment && c.wave == 2;
  EXPECT_TRUE(t3_sees_z2);
  EXPECT_EQ(schema_from_json(to_json(s)).hash(), s.hash());
}
