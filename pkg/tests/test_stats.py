"""Cross-project inference tests: stability, co-change, twin analysis."""

import pytest

from ccp_miner.errors import InputError
from ccp_miner.stats import (
    MetricSeries,
    co_change,
    load_series_csv,
    pearson,
    stability,
    twin_analysis,
)


def series(entity, **year_values):
    return MetricSeries(entity_id=entity, points={int(y[1:]): v for y, v in year_values.items()})


class TestPearson:
    def test_perfect_positive(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)

    def test_perfect_negative(self):
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_hand_computed(self):
        # cov = 2.5, sd_x = sd_y' -> r for [1,2,3,4] vs [1,3,2,4] is 0.8
        assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)

    def test_constant_series_rejected(self):
        with pytest.raises(ValueError):
            pearson([1, 1, 1], [1, 2, 3])

    def test_too_short(self):
        with pytest.raises(ValueError):
            pearson([1], [1])


class TestStability:
    def test_identical_adjacent_years(self):
        data = [
            series("a", y2018=0.2, y2019=0.2),
            series("b", y2018=0.4, y2019=0.4),
        ]
        report = stability(data)
        assert report.n_pairs == 2
        assert report.pearson == pytest.approx(1.0)
        assert report.mean_signed_delta == 0.0
        assert report.mean_abs_delta == 0.0

    def test_signed_vs_absolute_delta(self):
        data = [
            series("a", y2018=0.2, y2019=0.3),
            series("b", y2018=0.5, y2019=0.4),
        ]
        report = stability(data)
        assert report.mean_signed_delta == pytest.approx(0.0)
        assert report.mean_abs_delta == pytest.approx(0.1)

    def test_year_range_filter(self):
        data = [series("a", y2015=9.0, y2016=9.0, y2018=0.1, y2019=0.2, y2020=0.3)]
        with pytest.raises(InputError):
            stability(data, year_range=(2010, 2011))
        report = stability(data, year_range=(2018, 2020))
        assert report.n_pairs == 2

    def test_gap_years_skipped(self):
        data = [series("a", y2016=0.1, y2018=0.9, y2019=0.8), series("b", y2018=0.5, y2019=0.4)]
        assert stability(data).n_pairs == 2


class TestCoChange:
    def test_always_co_improving(self):
        i = [series("a", y2018=0.5, y2019=0.3), series("b", y2018=0.6, y2019=0.2)]
        j = [series("a", y2018=10.0, y2019=12.0), series("b", y2018=9.0, y2019=11.0)]
        report = co_change(i, j, improvement_sign_i=-1, improvement_sign_j=1)
        assert report.n_pairs == 2
        assert report.match_rate == 1.0
        assert report.precision == 1.0
        assert report.base_rate == 1.0
        assert report.lift == pytest.approx(0.0)

    def test_hand_counted_mixed_events(self):
        # events (imp_i, imp_j): (T,T), (T,F), (F,T), (F,F)
        i = [
            series("a", y2018=0.5, y2019=0.3),
            series("b", y2018=0.5, y2019=0.3),
            series("c", y2018=0.3, y2019=0.5),
            series("d", y2018=0.3, y2019=0.5),
        ]
        j = [
            series("a", y2018=1.0, y2019=2.0),
            series("b", y2018=2.0, y2019=1.0),
            series("c", y2018=1.0, y2019=2.0),
            series("d", y2018=2.0, y2019=1.0),
        ]
        report = co_change(i, j, improvement_sign_i=-1, improvement_sign_j=1)
        assert report.n_pairs == 4
        assert report.match_rate == 0.5
        assert report.precision == 0.5
        assert report.base_rate == 0.5
        assert report.lift == pytest.approx(0.0)

    def test_lift_symmetric(self):
        i = [
            series("a", y2018=0.5, y2019=0.3),
            series("b", y2018=0.5, y2019=0.3),
            series("c", y2018=0.3, y2019=0.5),
        ]
        j = [
            series("a", y2018=1.0, y2019=2.0),
            series("b", y2018=2.0, y2019=1.0),
            series("c", y2018=1.0, y2019=2.0),
        ]
        forward = co_change(i, j, improvement_sign_i=-1, improvement_sign_j=1)
        backward = co_change(j, i, improvement_sign_i=1, improvement_sign_j=-1)
        assert forward.lift == pytest.approx(backward.lift, abs=1e-9)

    def test_zero_threshold_is_strict(self):
        # an exact tie is not an improvement under the default policy
        i = [series("a", y2018=0.5, y2019=0.5), series("b", y2018=0.5, y2019=0.4)]
        j = [series("a", y2018=1.0, y2019=1.0), series("b", y2018=1.0, y2019=1.0)]
        report = co_change(i, j, improvement_sign_i=-1)
        assert report.precision == 0.0  # only b improved on i, j never improved

    def test_positive_threshold_is_inclusive(self):
        # deltas of 0.125 and 0.0625 are exact in binary floating point
        i = [series("a", y2018=0.5, y2019=0.375), series("b", y2018=0.5, y2019=0.4375)]
        j = [series("a", y2018=1.0, y2019=2.0), series("b", y2018=1.0, y2019=2.0)]
        # a's i-delta equals the threshold and still counts
        report = co_change(i, j, delta_i=0.125, improvement_sign_i=-1)
        assert report.precision == 1.0
        assert report.base_rate == 1.0

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            co_change([series("a", y2018=1.0, y2019=2.0)], [series("a", y2018=1.0, y2019=2.0)], delta_i=-0.1)

    def test_no_overlap_is_an_error(self):
        with pytest.raises(InputError):
            co_change([series("a", y2018=1.0, y2019=2.0)], [series("b", y2018=1.0, y2019=2.0)])


class TestTwinAnalysis:
    def project_pair(self, good=0.1, bad=0.5):
        # lower metric is better (sign -1)
        return [series("good", y2019=good), series("bad", y2019=bad)]

    def test_developer_better_in_better_project(self):
        devs = {
            ("ann", "good"): series("ann:good", y2019=0.1),
            ("ann", "bad"): series("ann:bad", y2019=0.4),
        }
        report = twin_analysis(devs, self.project_pair(), improvement_sign=-1)
        assert report.n_developer_pairs == 1
        assert report.precision == 1.0

    def test_developer_worse_in_better_project(self):
        devs = {
            ("ann", "good"): series("ann:good", y2019=0.4),
            ("ann", "bad"): series("ann:bad", y2019=0.1),
        }
        report = twin_analysis(devs, self.project_pair(), improvement_sign=-1)
        assert report.precision == 0.0

    def test_tied_projects_do_not_qualify(self):
        devs = {
            ("ann", "good"): series("ann:good", y2019=0.1),
            ("ann", "bad"): series("ann:bad", y2019=0.4),
        }
        with pytest.raises(InputError):
            twin_analysis(devs, self.project_pair(good=0.3, bad=0.3), improvement_sign=-1)

    def test_project_gap_threshold(self):
        devs = {
            ("ann", "good"): series("ann:good", y2019=0.1),
            ("ann", "bad"): series("ann:bad", y2019=0.4),
        }
        # gap is 0.4; with an inclusive threshold of 0.5 nothing qualifies
        with pytest.raises(InputError):
            twin_analysis(
                devs, self.project_pair(), delta_project=0.5, improvement_sign=-1
            )

    def test_multiple_developers_mixed(self):
        projects = self.project_pair()
        devs = {
            ("ann", "good"): series("ann:good", y2019=0.1),
            ("ann", "bad"): series("ann:bad", y2019=0.4),
            ("bob", "good"): series("bob:good", y2019=0.5),
            ("bob", "bad"): series("bob:bad", y2019=0.2),
        }
        report = twin_analysis(devs, projects, improvement_sign=-1)
        assert report.n_developer_pairs == 2
        assert report.precision == 0.5

    def test_developer_missing_one_project_skipped(self):
        devs = {("ann", "good"): series("ann:good", y2019=0.1)}
        with pytest.raises(InputError):
            twin_analysis(devs, self.project_pair(), improvement_sign=-1)


class TestLoadSeriesCsv:
    def test_round_values(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("entity,year,value\na,2018,0.5\na,2019,0.25\nb,2018,0.1\n")
        loaded = {s.entity_id: s.points for s in load_series_csv(path)}
        assert loaded == {"a": {2018: 0.5, 2019: 0.25}, "b": {2018: 0.1}}

    def test_duplicate_year_rejected(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("entity,year,value\na,2018,0.5\na,2018,0.6\n")
        with pytest.raises(InputError):
            load_series_csv(path)

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("entity,value\na,0.5\n")
        with pytest.raises(InputError):
            load_series_csv(path)
