import json

import numpy as np
import pytest

from polytope_scope.network import init_network
from polytope_scope.serialize import (atomic_write_text, complex_from_dict, complex_to_dict, load_checkpoint,
                                      load_complex, network_from_dict, network_to_dict, parse_sign_string,
                                      save_checkpoint, save_complex, sign_string)


class TestNetwork:
    def test_bit_exact_round_trip(self, tmp_path):
        net = init_network((2, 7, 5, 2), 4)
        save_checkpoint(net, tmp_path / "c.json", epoch=12, seed=4, loss=0.1 + 0.2)
        back, meta = load_checkpoint(tmp_path / "c.json")
        assert meta == {"epoch": 12, "seed": 4, "loss": 0.1 + 0.2}
        for a, b in zip(net.layers, back.layers):
            assert np.array_equal(a.weight, b.weight) and np.array_equal(a.bias, b.bias)

    def test_awkward_floats(self):
        net = init_network((2, 2, 1), 0)
        w = np.array([[5e-324, -1.7976931348623157e308], [1 / 3, np.nextafter(1.0, 2.0)]])
        net = net.with_params([(w, np.array([0.1, -0.0])), net.params()[1]])
        back = network_from_dict(json.loads(json.dumps(network_to_dict(net))))
        assert np.array_equal(back.layers[0].weight, w)

    def test_deterministic_bytes(self, tmp_path):
        net = init_network((2, 3, 1), 1)
        save_checkpoint(net, tmp_path / "a.json", 0, 1, 1.0)
        save_checkpoint(net, tmp_path / "b.json", 0, 1, 1.0)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


class TestComplex:
    def test_round_trip(self, tmp_path, small_complexes):
        for i, (_, cx) in enumerate(small_complexes):
            save_complex(cx, tmp_path / f"{i}.json")
            back = load_complex(tmp_path / f"{i}.json")
            assert back.f_vector() == cx.f_vector()
            assert np.array_equal(back.vertices, cx.vertices)
            assert np.array_equal(back.vertex_signs, cx.vertex_signs)
            assert np.array_equal(back.edge_signs, cx.edge_signs)
            assert np.array_equal(back.face_signs, cx.face_signs)
            assert back.face_edges == cx.face_edges and back.face_vertices == cx.face_vertices
            assert back.face_by_pattern == cx.face_by_pattern
            for a, b in zip(back.network.params(), cx.network.params()):
                assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_box_complex(self, box_complex):
        back = complex_from_dict(json.loads(json.dumps(complex_to_dict(box_complex))))
        assert back.f_vector().as_tuple() == (4, 4, 1)


class TestSigns:
    def test_round_trip(self):
        s = np.array([-1, 0, 1, 1, -1], dtype=np.int8)
        assert sign_string(s) == "-0++-"
        assert np.array_equal(parse_sign_string("-0++-"), s)

    def test_invalid_char(self):
        with pytest.raises(KeyError):
            parse_sign_string("+x")


class TestAtomicWrite:
    def test_replaces_and_leaves_no_temp(self, tmp_path):
        p = tmp_path / "sub" / "f.txt"
        atomic_write_text(p, "one")
        atomic_write_text(p, "two")
        assert p.read_text() == "two"
        assert [q.name for q in p.parent.iterdir()] == ["f.txt"]
