"""Evaluation report assembly and invariants."""

import numpy as np

from microgext import evaluation, session_io, training
from microgext.evaluation import _confusion
from microgext.session_io import read_command_log, write_command_log
from microgext.editor import CommandKind, Document, EditCommand, Granularity, apply
from microgext.training import split_fold


class TestConfusionAssembly:
    def test_perfect_predictions_identity(self):
        y = np.array([0, 1, 2, 3, 4, 5, 6, 7, 3, 3])
        conf = _confusion(y, y, 8)
        assert np.all(conf == np.diag(np.bincount(y, minlength=8)))

    def test_rows_sum_to_support(self, tiny_trained, small_dataset):
        params, _ = tiny_trained
        _, _, test_clips = split_fold(small_dataset, 0)
        report = evaluation.evaluate(params, test_clips)
        support = np.bincount(
            [training.class_index(c.gesture) for c in test_clips], minlength=8
        )
        assert np.array_equal(report.class_confusion.sum(axis=1), support)
        assert report.state_confusion.sum() > 0
        assert np.all(report.class_confusion >= 0)

    def test_macro_matches_per_class_mean(self, tiny_trained, small_dataset):
        params, _ = tiny_trained
        _, _, test_clips = split_fold(small_dataset, 0)
        report = evaluation.evaluate(params, test_clips)
        assert report.macro_accuracy == float(np.nanmean(report.per_class_accuracy))


class TestCommandLog:
    ENTRIES = [
        (0.5, EditCommand.set_granularity(Granularity.WORD)),
        (1.0, EditCommand.move_caret(2)),
        (1.5, EditCommand.select_range(-1)),
        (2.0, EditCommand(CommandKind.COPY)),
        (2.5, EditCommand(CommandKind.PASTE)),
        (3.0, EditCommand(CommandKind.UNDO)),
    ]

    def test_round_trip(self, tmp_path):
        path = tmp_path / "commands.log"
        write_command_log(path, self.ENTRIES)
        back = read_command_log(path)
        assert [c for _, c in back] == [c for _, c in self.ENTRIES]
        assert [t for t, _ in back] == [t for t, _ in self.ENTRIES]

    def test_byte_exact_golden(self, tmp_path):
        p1, p2 = tmp_path / "a.log", tmp_path / "b.log"
        write_command_log(p1, self.ENTRIES)
        write_command_log(p2, self.ENTRIES)
        assert p1.read_bytes() == p2.read_bytes()

    def test_replay_yields_identical_final_state(self, tmp_path):
        text = "alpha beta gamma delta"
        commands = [
            EditCommand.set_granularity(Granularity.WORD),
            EditCommand.move_caret(1),
            EditCommand.select_range(2),
            EditCommand(CommandKind.CUT),
            EditCommand(CommandKind.PASTE),
            EditCommand(CommandKind.SELECT_ALL),
            EditCommand(CommandKind.DELETE),
            EditCommand(CommandKind.UNDO),
        ]
        direct = Document.create(text)
        for cmd in commands:
            direct = apply(direct, cmd)

        path = tmp_path / "commands.log"
        write_command_log(path, [(float(i), c) for i, c in enumerate(commands)])
        replayed = Document.create(text)
        for _, cmd in read_command_log(path):
            replayed = apply(replayed, cmd)
        assert (replayed.text, replayed.caret, replayed.selection, replayed.clipboard) == (
            direct.text, direct.caret, direct.selection, direct.clipboard,
        )
