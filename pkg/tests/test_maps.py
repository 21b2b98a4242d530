from __future__ import annotations

import json

import pytest

from quadtwist.arith import Discriminant
from quadtwist.maps import (
    FORMAT_TAG,
    MapError,
    MapFormatError,
    PolyMap,
    dump_map,
    load_map_file,
    loads_map,
    map_compose,
    map_to_json,
    maps_equal,
    save_map_file,
)
from quadtwist.poly import PolyRing, conjugate_pair
from quadtwist.schwarz import build_mu, build_phi, build_tau

K = Discriminant(2)


def tau_json() -> dict:
    return map_to_json(build_tau(K))


class TestRoundTrip:
    @pytest.mark.parametrize("builder", [build_tau, build_mu, build_phi])
    def test_export_import(self, builder, tmp_path):
        f = builder(K)
        path = tmp_path / "f.json"
        save_map_file(f, path)
        g = load_map_file(path)
        assert g == f
        assert g.fiber_order == f.fiber_order
        assert dump_map(g) == dump_map(f)

    def test_semilinear_map_round_trip(self):
        X, XB = conjugate_pair("x", "xb")
        Y, YB = conjugate_pair("y", "yb")
        R = PolyRing(K, [X, XB, Y, YB])
        f = PolyMap(R.vars, ("x", "y"), (R["xb"], K(3, 2) * R["yb"]), "tau_w")
        assert loads_map(dump_map(f)) == f


class TestValidation:
    def test_noncanonical_rational(self):
        data = tau_json()
        data["components"][2][0][1] = "2/4"
        with pytest.raises(MapFormatError, match="non-canonical rational"):
            loads_map(json.dumps(data))

    def test_negative_affine_exponent(self):
        data = tau_json()
        data["components"][0][0][0][0] = -1
        with pytest.raises(MapFormatError, match="negative exponent on affine variable a") as err:
            loads_map(json.dumps(data))
        assert err.value.field == "components[0][0][0]"

    def test_unknown_kind(self):
        data = tau_json()
        data["vars"][0]["kind"] = "projective"
        with pytest.raises(MapFormatError) as err:
            loads_map(json.dumps(data))
        assert err.value.field == "vars[0].kind"

    def test_malformed_json_reports_line(self):
        text = dump_map(build_tau(K)).replace('"domain"', '"domain" ,,', 1)
        with pytest.raises(MapFormatError) as err:
            loads_map(text)
        assert err.value.line is not None and err.value.line > 1

    def test_square_alpha(self):
        data = tau_json()
        data["alpha"] = "4"
        with pytest.raises(MapFormatError, match="alpha is a square"):
            loads_map(json.dumps(data))

    def test_asymmetric_partner(self):
        data = tau_json()
        data["vars"][0]["partner"] = "b"
        with pytest.raises(MapFormatError, match="not symmetric"):
            loads_map(json.dumps(data))

    def test_zero_and_repeated_terms(self):
        data = tau_json()
        data["components"][0][0][1] = "0"
        with pytest.raises(MapFormatError, match="zero coefficient"):
            loads_map(json.dumps(data))
        data = tau_json()
        data["components"][0].append(list(data["components"][0][0]))
        with pytest.raises(MapFormatError, match="repeated monomial"):
            loads_map(json.dumps(data))

    def test_format_tag(self):
        data = tau_json()
        assert data["format"] == FORMAT_TAG
        data["format"] = "other"
        with pytest.raises(MapFormatError):
            loads_map(json.dumps(data))


class TestCompose:
    def test_arity_mismatch(self):
        X, XB = conjugate_pair("x", "xb")
        R = PolyRing(K, [X, XB])
        f = PolyMap(R.vars, ("x",), (R["xb"],))
        with pytest.raises(MapError):
            map_compose(build_tau(K), f)

    def test_semilinear_composition_conjugates(self):
        X, XB = conjugate_pair("x", "xb")
        R = PolyRing(K, [X, XB])
        f = PolyMap(R.vars, ("x",), (K(1, 1) * R["xb"],), "f")
        # f(f(x)) = (1+t) * sigma((1+t) xb) = (1+t)(1-t) x = -x
        assert map_compose(f, f).components[0] == -R["x"]

    def test_maps_equal_ignores_names(self):
        t = build_tau(K)
        assert maps_equal(t, PolyMap(t.vars, t.domain, t.components, "other"))
