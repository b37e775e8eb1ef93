"""Coefficient-file and dataset-CSV parsing and round trips."""

import pytest

from divergelane import (
    CostCoefficients,
    DataPoint,
    DemandConfig,
    FlowDistribution,
    ParseError,
    format_coefficients,
    format_dataset,
    parse_coefficients,
    parse_dataset,
)

from conftest import CAL_VAL


GNARLY = CostCoefficients(
    cf1=1.0 / 3.0,
    cf2=2.0 / 7.0,
    cb=5.0 / 11.0,
    lambda1=0.1234567890123456,
    lambda2=1.0 / 3.0,
    mu1=0.9999999999999999,
    mu2=1e-9,
    nu=3.141592653589793,
)


class TestCoefficients:
    def test_round_trip_exact(self):
        for c in (CAL_VAL, GNARLY):
            assert parse_coefficients(format_coefficients(c)) == c

    def test_symmetry_flag_round_trip(self):
        text = format_coefficients(CAL_VAL, symmetry=True)
        assert "symmetry = true" in text
        assert parse_coefficients(text) == CAL_VAL

    def test_symmetry_fills_mirrored_keys(self):
        text = "cf1 = 1.45\nlambda1 = 0.87\nmu1 = 0.69\nnu = 1.0\nsymmetry = true\n"
        assert parse_coefficients(text) == CAL_VAL

    def test_symmetry_mismatch_rejected(self):
        text = "cf1 = 1.45\ncf2 = 2.0\nlambda1 = 0.87\nmu1 = 0.69\nnu = 1\nsymmetry = true\n"
        with pytest.raises(ParseError, match="cf2"):
            parse_coefficients(text)

    def test_missing_key_is_named(self):
        text = format_coefficients(CAL_VAL).replace("nu = 1.0\n", "")
        with pytest.raises(ParseError, match="'nu'"):
            parse_coefficients(text)

    def test_comments_and_blank_lines(self):
        text = "# reference values\n\n" + format_coefficients(CAL_VAL) + "\n# end\n"
        assert parse_coefficients(text) == CAL_VAL

    def test_unknown_key_with_line_number(self):
        with pytest.raises(ParseError, match="line 2.*bogus"):
            parse_coefficients("cf1 = 1.0\nbogus = 2\n")

    def test_bad_number_with_line_number(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_coefficients("cf1 = one\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ParseError, match="duplicate"):
            parse_coefficients("cf1 = 1\ncf1 = 2\n")

    def test_invalid_values_rejected(self):
        text = format_coefficients(CAL_VAL).replace("lambda1 = 0.87", "lambda1 = 1.87")
        with pytest.raises(ParseError, match="lambda1"):
            parse_coefficients(text)


def sample_points():
    return [
        DataPoint(
            demand=DemandConfig(0.4, 0.6),
            flow=FlowDistribution(0.3, 0.1, 0.45, 0.15),
            total_demand_vph=3000.0,
        ),
        DataPoint(
            demand=DemandConfig(1.0 / 3.0, 2.0 / 3.0),
            flow=FlowDistribution(1.0 / 3.0 - 0.1, 0.1, 0.5, 2.0 / 3.0 - 0.5),
            total_demand_vph=3200.0,
        ),
    ]


class TestDataset:
    def test_round_trip_exact(self):
        points = sample_points()
        assert parse_dataset(format_dataset(points)) == points

    def test_rows_numbered_from_one(self):
        lines = format_dataset(sample_points()).splitlines()
        assert lines[0] == "k,q1,q2,xf1,xb1,xf2,xb2,total_demand_vph"
        assert lines[1].startswith("1,")
        assert lines[2].startswith("2,")

    def test_header_required(self):
        with pytest.raises(ParseError, match="header"):
            parse_dataset("q1,q2\n0.5,0.5\n")

    def test_field_count_checked(self):
        text = format_dataset(sample_points()) + "3,0.5,0.5\n"
        with pytest.raises(ParseError, match="line 4"):
            parse_dataset(text)

    def test_bad_number_reported(self):
        text = "k,q1,q2,xf1,xb1,xf2,xb2,total_demand_vph\n1,a,0.5,0.4,0.1,0.4,0.1,0\n"
        with pytest.raises(ParseError, match="line 2"):
            parse_dataset(text)

    def test_infeasible_row_named(self):
        text = "k,q1,q2,xf1,xb1,xf2,xb2,total_demand_vph\n1,0.5,0.5,0.4,0.2,0.4,0.1,0\n"
        with pytest.raises(ParseError, match="k=1"):
            parse_dataset(text)

    def test_header_only_gives_empty_dataset(self):
        assert parse_dataset("k,q1,q2,xf1,xb1,xf2,xb2,total_demand_vph\n") == []
