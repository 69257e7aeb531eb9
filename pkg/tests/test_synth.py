import numpy as np

from spectrafuse import evaluation, experiment, gbdt, prep1d, prepeem, synth


class TestDeterminism:
    def test_same_seed_bit_identical(self):
        spec = synth.small_spec(seed=21)
        a = synth.generate_dataset(spec)
        b = synth.generate_dataset(spec)
        for modality in a:
            for ra, rb in zip(a[modality].records, b[modality].records):
                assert ra.patient_id == rb.patient_id
                if modality == "EEM":
                    assert np.array_equal(ra.payload.grid, rb.payload.grid)
                    assert np.array_equal(ra.blank.grid, rb.blank.grid)
                else:
                    assert np.array_equal(ra.payload.intensity, rb.payload.intensity)

    def test_different_seed_differs(self):
        a, _ = synth.gen_1d(synth.small_spec(seed=1), "FTIR")
        b, _ = synth.gen_1d(synth.small_spec(seed=2), "FTIR")
        assert not np.array_equal(a.records[0].payload.intensity,
                                  b.records[0].payload.intensity)

    def test_generation_independent_of_call_order(self):
        spec = synth.small_spec(seed=5)
        raman_only, _ = synth.gen_1d(spec, "Raman")
        full = synth.generate_dataset(spec)
        for ra, rb in zip(raman_only.records, full["Raman"].records):
            assert np.array_equal(ra.payload.intensity, rb.payload.intensity)


class TestCohortShape:
    def test_replicate_structure(self):
        spec = synth.small_spec(seed=0, replicate_count=3)
        ftir, _ = synth.gen_1d(spec, "FTIR")
        raman, _ = synth.gen_1d(spec, "Raman")
        for pid in ftir.patients():
            assert [r.replicate for r in ftir.records_for(pid)] == [1, 2, 3]
        for pid in raman.patients():
            assert [r.replicate for r in raman.records_for(pid)] == [1]

    def test_cohort_availability_counts(self):
        spec = synth.SynthSpec(replicate_count=3, seed=0, ftir_step=400.0,
                               raman_step=400.0, eem_ex_step=60.0, eem_em_step=96.0,
                               availability=synth.COHORT_AVAILABILITY)
        tables = synth.generate_dataset(spec)
        assert len(tables["FTIR"]) == 900          # 300 patients x 3 replicates
        assert len(tables["Raman"]) == 272
        assert len(tables["EEM"]) == 276


class TestClassEffect:
    def test_zero_noise_large_delta_linearly_separable(self):
        spec = synth.SynthSpec(n_breast=10, n_colon=0, n_control=10, seed=3,
                               replicate_count=1, noise=0.0, delta=0.8,
                               ftir_step=8.0)
        table, truth = synth.gen_1d(spec, "FTIR")
        axis = table.records[0].payload.axis.values
        peak_idx = int(np.argmin(np.abs(axis - truth["disease_peaks"][0])))
        cancer, control = [], []
        for rec in table.records:
            (cancer if rec.scenario_tag == "breast" else control).append(
                rec.payload.intensity[peak_idx])
        assert min(cancer) > max(control)

    def test_null_spec_classes_identically_distributed(self):
        # with delta = 0 the group tag never enters generation: a breast and
        # a control patient with the same per-patient stream index differ
        # only through their stream keys
        spec = synth.null_spec(seed=2, n_breast=5, n_colon=5, n_control=5,
                               availability=None, ftir_step=40.0)
        table, truth = synth.gen_1d(spec, "FTIR")
        assert all(e == 0.0 for e in truth["effects"].values())

    def test_carrier_subsets(self):
        spec = synth.complementary_spec(seed=0, n_breast=6, n_colon=6, n_control=6,
                                        availability=None)
        _, truth = synth.gen_1d(spec, "FTIR")
        carriers = {pid for pid, e in truth["effects"].items() if e > 0}
        assert carriers == {"BR000", "BR002", "BR004", "CO000", "CO002", "CO004"}

    def test_downstream_null_auc_near_chance(self):
        spec = synth.null_spec(seed=6, n_breast=12, n_colon=0, n_control=12,
                               availability=None, replicate_count=1,
                               ftir_step=16.0)
        table, _ = synth.gen_1d(spec, "FTIR")
        study = experiment.preprocess_study(
            {"FTIR": table}, prep1d.PipelineConfig(replicate_mode="keep_all"))
        fm = experiment.build_cell_matrix(study, "breast", ("FTIR",))
        res = evaluation.cross_validate(
            fm, params=gbdt.GBDTParams(n_rounds=20, max_depth=3), k=4, seed=0)
        assert 0.35 <= res.summary.mean_auc() <= 0.65


class TestEemGroundTruth:
    def test_planted_ridges_subset_of_removal_window(self):
        table, truth = synth.gen_eem(synth.SynthSpec(n_breast=1, n_colon=0,
                                                     n_control=0, seed=8))
        rec = table.records[0]
        masked = prepeem.remove_rayleigh(rec.payload, half_window=25.0)
        assert np.all(masked.mask[truth["ridge_cells"]])

    def test_blank_only_sample_zeroes_out(self):
        table, _ = synth.gen_eem(synth.SynthSpec(n_breast=1, n_colon=0,
                                                 n_control=0, seed=9))
        rec = table.records[0]
        v = prepeem.eem_pipeline(rec.blank, rec.blank)
        assert np.array_equal(v, np.zeros_like(v))

    def test_strongest_fluorophore_survives_pipeline(self):
        spec = synth.SynthSpec(n_breast=2, n_colon=0, n_control=2, seed=10)
        table, truth = synth.gen_eem(spec)
        ex_c, em_c = truth["strongest_fluorophore"]
        for rec in table.records:
            v = prepeem.eem_pipeline(rec.payload, rec.blank)
            grid = v.reshape(len(rec.payload.ex_axis), len(rec.payload.em_axis))
            i, j = np.unravel_index(np.argmax(grid), grid.shape)
            assert abs(rec.payload.ex_axis.values[i] - ex_c) <= spec.eem_ex_step
            assert abs(rec.payload.em_axis.values[j] - em_c) <= spec.eem_em_step


class TestWrittenDataset:
    def test_write_then_load_matches_schema(self, tmp_path):
        from spectrafuse.core import load_dataset
        spec = synth.small_spec(seed=11)
        manifest = synth.write_dataset(spec, tmp_path / "ds")
        tables = load_dataset(manifest)
        assert set(tables) == {"FTIR", "Raman", "EEM"}
        for rec in tables["EEM"].records:
            assert rec.blank is not None

    def test_spec_round_trip(self):
        spec = synth.complementary_spec(seed=3)
        twin = synth.SynthSpec.from_dict(spec.to_dict())
        assert twin == spec
