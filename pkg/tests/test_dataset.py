"""Schema validation, CSV round-trips, label encoding, and synthetic data."""

import numpy as np
import pytest

from floodsift import dataset

SCHEMA = dataset.flow_schema()
SYMBOLIC = set(SCHEMA.symbolic_indices)


def make_row(base=0.0, flags="ack", node_from="n1", node_to="n2", label="Normal"):
    cells = []
    for i in range(len(SCHEMA)):
        if i == SCHEMA.symbolic_indices[0]:
            cells.append(flags)
        elif i == SCHEMA.symbolic_indices[1]:
            cells.append(node_from)
        elif i == SCHEMA.symbolic_indices[2]:
            cells.append(node_to)
        else:
            cells.append(float(base))
    return dataset.FlowRecord(values=tuple(cells), label=label)


def make_dataset(rows):
    return dataset.Dataset(schema=SCHEMA, records=tuple(rows))


class TestSchema:
    def test_shape(self):
        assert len(SCHEMA) == 27
        assert SCHEMA.symbolic_indices == (7, 12, 13)
        assert len(SCHEMA.continuous_indices) == 24
        assert len(set(SCHEMA.names)) == 27

    def test_symbolic_columns_by_name(self):
        names = [SCHEMA.names[i] for i in SCHEMA.symbolic_indices]
        assert names == ["FLAGS", "NODE_NAME_FROM", "NODE_NAME_TO"]

    def test_rejects_renamed_column(self):
        features = list(SCHEMA.features)
        features[0] = dataset.FeatureDescriptor("BOGUS", dataset.CONTINUOUS)
        with pytest.raises(dataset.SchemaError):
            dataset.FeatureSchema(tuple(features))

    def test_rejects_wrong_kind(self):
        features = list(SCHEMA.features)
        features[7] = dataset.FeatureDescriptor(features[7].name, dataset.CONTINUOUS)
        with pytest.raises(dataset.SchemaError):
            dataset.FeatureSchema(tuple(features))


class TestDatasetValidation:
    def test_wrong_cell_count(self):
        rec = dataset.FlowRecord(values=(1.0, 2.0), label="Normal")
        with pytest.raises(dataset.SchemaError):
            make_dataset([rec])

    def test_string_in_continuous_cell(self):
        rec = make_row()
        cells = list(rec.values)
        cells[0] = "oops"
        with pytest.raises(dataset.ParseError):
            make_dataset([dataset.FlowRecord(values=tuple(cells), label="Normal")])

    def test_non_finite_cell(self):
        rec = make_row()
        cells = list(rec.values)
        cells[1] = float("nan")
        with pytest.raises(dataset.ParseError):
            make_dataset([dataset.FlowRecord(values=tuple(cells), label="Normal")])

    def test_number_in_symbolic_cell(self):
        rec = make_row()
        cells = list(rec.values)
        cells[7] = 3.5
        with pytest.raises(dataset.ParseError):
            make_dataset([dataset.FlowRecord(values=tuple(cells), label="Normal")])

    def test_unknown_label(self):
        with pytest.raises(dataset.LabelError):
            make_dataset([make_row(label="Flood")])

    def test_mixed_labelled_and_unlabelled(self):
        with pytest.raises(dataset.LabelError):
            make_dataset([make_row(), make_row(label=None)])

    def test_has_labels(self):
        assert make_dataset([make_row()]).has_labels
        assert not make_dataset([make_row(label=None)]).has_labels
        assert not make_dataset([]).has_labels


class TestCsv:
    def test_round_trip(self, tmp_path):
        ds = dataset.generate_synthetic(50, seed=3)
        path = tmp_path / "flows.csv"
        dataset.save_csv(ds, path)
        back = dataset.load_csv(path)
        assert back.records == ds.records

    def test_round_trip_unlabelled(self, tmp_path):
        ds = make_dataset([make_row(base=1.25, label=None),
                           make_row(base=-3.5, label=None)])
        path = tmp_path / "flows.csv"
        dataset.save_csv(ds, path)
        back = dataset.load_csv(path, require_label=False)
        assert back.records == ds.records
        assert not back.has_labels

    def test_header_case_insensitive(self, tmp_path):
        ds = dataset.generate_synthetic(10, seed=1)
        path = tmp_path / "flows.csv"
        dataset.save_csv(ds, path)
        text = path.read_text()
        header, rest = text.split("\n", 1)
        (tmp_path / "lower.csv").write_text(header.lower() + "\n" + rest)
        back = dataset.load_csv(tmp_path / "lower.csv")
        assert back.records == ds.records

    def test_reordered_columns(self, tmp_path):
        ds = dataset.generate_synthetic(10, seed=1)
        path = tmp_path / "flows.csv"
        dataset.save_csv(ds, path)
        lines = path.read_text().strip().split("\n")
        cols = [line.split(",") for line in lines]
        order = list(range(len(cols[0])))[::-1]
        flipped = "\n".join(",".join(row[i] for i in order) for row in cols) + "\n"
        (tmp_path / "flipped.csv").write_text(flipped)
        back = dataset.load_csv(tmp_path / "flipped.csv")
        assert back.records == ds.records

    def test_missing_column(self, tmp_path):
        ds = dataset.generate_synthetic(5, seed=1)
        dataset.save_csv(ds, tmp_path / "flows.csv")
        lines = (tmp_path / "flows.csv").read_text().strip().split("\n")
        trimmed = "\n".join(",".join(line.split(",")[1:]) for line in lines)
        (tmp_path / "bad.csv").write_text(trimmed + "\n")
        with pytest.raises(dataset.SchemaError):
            dataset.load_csv(tmp_path / "bad.csv")

    def test_duplicate_column(self, tmp_path):
        ds = dataset.generate_synthetic(5, seed=1)
        dataset.save_csv(ds, tmp_path / "flows.csv")
        lines = (tmp_path / "flows.csv").read_text().strip().split("\n")
        doubled = "\n".join(line + "," + line.split(",")[0] for line in lines)
        (tmp_path / "bad.csv").write_text(doubled + "\n")
        with pytest.raises(dataset.SchemaError):
            dataset.load_csv(tmp_path / "bad.csv")

    def test_extra_column(self, tmp_path):
        ds = dataset.generate_synthetic(5, seed=1)
        dataset.save_csv(ds, tmp_path / "flows.csv")
        lines = (tmp_path / "flows.csv").read_text().strip().split("\n")
        lines[0] += ",EXTRA"
        widened = "\n".join([lines[0]] + [line + ",0" for line in lines[1:]])
        (tmp_path / "bad.csv").write_text(widened + "\n")
        with pytest.raises(dataset.SchemaError):
            dataset.load_csv(tmp_path / "bad.csv")

    def test_missing_label_column_required(self, tmp_path):
        ds = make_dataset([make_row(label=None)])
        dataset.save_csv(ds, tmp_path / "flows.csv")
        with pytest.raises(dataset.SchemaError):
            dataset.load_csv(tmp_path / "flows.csv")

    def test_bad_number_reports_one_based_row(self, tmp_path):
        ds = dataset.generate_synthetic(5, seed=1)
        dataset.save_csv(ds, tmp_path / "flows.csv")
        lines = (tmp_path / "flows.csv").read_text().strip().split("\n")
        cells = lines[2].split(",")
        cells[0] = "not-a-number"
        lines[2] = ",".join(cells)
        (tmp_path / "bad.csv").write_text("\n".join(lines) + "\n")
        with pytest.raises(dataset.ParseError, match="row 2"):
            dataset.load_csv(tmp_path / "bad.csv")

    def test_unknown_class_rejected(self, tmp_path):
        ds = dataset.generate_synthetic(5, seed=1)
        dataset.save_csv(ds, tmp_path / "flows.csv")
        text = (tmp_path / "flows.csv").read_text().replace("Normal", "normality")
        (tmp_path / "bad.csv").write_text(text)
        with pytest.raises(dataset.LabelError):
            dataset.load_csv(tmp_path / "bad.csv")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            dataset.load_csv(tmp_path / "nope.csv")


def test_check_duplicates():
    a = make_row(base=1.0)
    b = make_row(base=2.0)
    assert dataset.check_duplicates(make_dataset([a, b, a])) == 1
    assert dataset.check_duplicates(make_dataset([a, b])) == 0
    assert dataset.check_duplicates(make_dataset([a, a, a])) == 2


class TestEncoder:
    def test_codes_follow_sorted_category_order(self):
        rows = [make_row(flags=f) for f in ("udp", "ack", "tcp")]
        enc = dataset.fit_encoder(make_dataset(rows))
        assert enc.categories("FLAGS") == ("ack", "tcp", "udp")
        assert [enc.encode_value("FLAGS", f) for f in ("ack", "tcp", "udp")] == [0, 1, 2]

    def test_row_order_does_not_matter(self):
        rows = [make_row(flags=f) for f in ("udp", "ack", "tcp")]
        enc_fwd = dataset.fit_encoder(make_dataset(rows))
        enc_rev = dataset.fit_encoder(make_dataset(rows[::-1]))
        assert enc_fwd.mapping == enc_rev.mapping

    def test_decode_round_trip(self):
        enc = dataset.fit_encoder(make_dataset([make_row(flags="syn"),
                                                make_row(flags="fin")]))
        for flag in ("fin", "syn"):
            assert enc.decode_value("FLAGS", enc.encode_value("FLAGS", flag)) == flag

    def test_unseen_category_raises(self):
        enc = dataset.fit_encoder(make_dataset([make_row()]))
        with pytest.raises(dataset.EncodingError):
            enc.encode_value("FLAGS", "unseen")
        with pytest.raises(dataset.EncodingError):
            enc.decode_value("FLAGS", 99)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            dataset.fit_encoder(make_dataset([]))


class TestEncode:
    def test_matrix_shapes_and_dtypes(self):
        ds = dataset.generate_synthetic(40, seed=5)
        enc = dataset.fit_encoder(ds)
        X, y = dataset.encode(ds, enc)
        assert X.shape == (40, 27) and X.dtype == np.float64
        assert y.shape == (40,) and y.dtype == np.int64
        assert set(np.unique(y)) <= set(range(5))

    def test_continuous_cells_pass_through(self):
        rows = [make_row(base=2.5), make_row(base=-1.0)]
        ds = make_dataset(rows)
        X, _ = dataset.encode(ds, dataset.fit_encoder(ds))
        for i in SCHEMA.continuous_indices:
            assert X[0, i] == 2.5 and X[1, i] == -1.0

    def test_symbolic_cells_become_codes(self):
        rows = [make_row(flags="b"), make_row(flags="a")]
        ds = make_dataset(rows)
        X, _ = dataset.encode(ds, dataset.fit_encoder(ds))
        flags_col = SCHEMA.symbolic_indices[0]
        assert X[0, flags_col] == 1.0 and X[1, flags_col] == 0.0

    def test_unlabelled_gives_no_targets(self):
        ds = make_dataset([make_row(label=None)])
        _, y = dataset.encode(ds, dataset.fit_encoder(ds))
        assert y is None

    def test_label_codes_match_class_name_order(self):
        rows = [make_row(label=name) for name in dataset.CLASS_NAMES]
        ds = make_dataset(rows)
        _, y = dataset.encode(ds, dataset.fit_encoder(ds))
        assert y.tolist() == [0, 1, 2, 3, 4]


class TestClassDistribution:
    def test_counts_and_fractions(self):
        dist = dataset.class_distribution([0, 0, 1, 4])
        assert dist.counts == (2, 1, 0, 0, 1)
        assert dist.total == 4
        assert abs(sum(dist.fractions) - 1.0) < 1e-12
        assert dist.fractions[0] == 0.5

    def test_empty_vector(self):
        dist = dataset.class_distribution([])
        assert dist.counts == (0,) * 5
        assert dist.fractions == (0.0,) * 5

    def test_out_of_range_code(self):
        with pytest.raises(ValueError):
            dataset.class_distribution([0, 5])


def test_reference_mix():
    assert sum(dataset.REFERENCE_CLASS_COUNTS) == 1048575
    props = dataset.DEFAULT_CLASS_PROPORTIONS
    assert abs(sum(props) - 1.0) < 1e-12
    assert props[0] > 0.89
    assert abs(props[3] - 0.0031) < 1e-4


class TestSynthetic:
    def test_default_mix_counts_for_1000_rows(self):
        ds = dataset.generate_synthetic(1000, seed=11)
        enc = dataset.fit_encoder(ds)
        _, y = dataset.encode(ds, enc)
        assert dataset.class_distribution(y).counts == (896, 93, 6, 3, 2)

    def test_rounding_residual_lands_on_first_class(self):
        ds = dataset.generate_synthetic(600, seed=7)
        _, y = dataset.encode(ds, dataset.fit_encoder(ds))
        assert dataset.class_distribution(y).counts == (537, 56, 4, 2, 1)

    def test_equal_mix(self):
        ds = dataset.generate_synthetic(500, proportions=(0.2,) * 5, seed=0)
        _, y = dataset.encode(ds, dataset.fit_encoder(ds))
        assert dataset.class_distribution(y).counts == (100,) * 5

    def test_deterministic(self):
        a = dataset.generate_synthetic(80, seed=9)
        b = dataset.generate_synthetic(80, seed=9)
        c = dataset.generate_synthetic(80, seed=10)
        assert a.records == b.records
        assert a.records != c.records

    def test_class_mean_distances_match_separation(self):
        ds = dataset.generate_synthetic(500, proportions=(0.2,) * 5,
                                        separation=6.0, seed=2)
        enc = dataset.fit_encoder(ds)
        X, y = dataset.encode(ds, enc)
        cont = list(SCHEMA.continuous_indices)
        means = [X[y == c][:, cont].mean(axis=0) for c in range(5)]
        for a in range(5):
            for b in range(a + 1, 5):
                dist = np.linalg.norm(means[a] - means[b])
                assert abs(dist - 6.0) < 0.6

    def test_symbolic_pools_differ_by_class(self):
        ds = dataset.generate_synthetic(300, proportions=(0.5, 0.5, 0, 0, 0), seed=4)
        flags_idx = SCHEMA.symbolic_indices[0]
        per_class = {}
        for rec in ds.records:
            per_class.setdefault(rec.label, set()).add(rec.values[flags_idx])
        assert per_class["Normal"].isdisjoint(per_class["UDP-Flood"])

    def test_rows_are_grouped_by_class(self):
        ds = dataset.generate_synthetic(200, seed=6)
        labels = [rec.label for rec in ds.records]
        codes = [dataset.CLASS_CODES[name] for name in labels]
        assert codes == sorted(codes)

    def test_validation(self):
        with pytest.raises(ValueError):
            dataset.generate_synthetic(4)
        with pytest.raises(ValueError):
            dataset.generate_synthetic(100, separation=0.0)
        with pytest.raises(ValueError):
            dataset.generate_synthetic(100, proportions=(0.5, 0.5))
        with pytest.raises(ValueError):
            dataset.generate_synthetic(100, proportions=(0.6, 0.6, 0, 0, -0.2))
        with pytest.raises(ValueError):
            dataset.generate_synthetic(100, proportions=(0.9, 0.2, 0, 0, 0))
        with pytest.raises(ValueError):
            dataset.generate_synthetic(5, proportions=(0.0, 0.2, 0.2, 0.3, 0.3))
