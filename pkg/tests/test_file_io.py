import json
import shutil
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))
from neural_particles.file_io import (
    atomic_write_text,
    format_value,
    read_csv,
    read_experiment_csv,
    read_file_content,
    render_csv,
    write_csv,
    write_json,
)


class TestFileIO(unittest.TestCase):

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()
        self.file_path = Path(self.test_dir) / "test_file.csv"

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_csv_round_trip(self):
        """Floats survive a write/read cycle bit for bit."""
        values = [0.1, 1.0 / 3.0, 1e-300, -2.5e17]
        write_csv(self.file_path, ["i", "value"], list(enumerate(values)))
        rows = read_csv(self.file_path)
        self.assertEqual([float(r["value"]) for r in rows], values)
        self.assertEqual(rows[2]["i"], "2")

    def test_cell_formatting(self):
        self.assertEqual(format_value(True), "true")
        self.assertEqual(format_value(np.bool_(False)), "false")
        self.assertEqual(format_value(np.int64(7)), "7")
        self.assertEqual(format_value(np.float64(0.5)), "0.5")
        self.assertEqual(format_value(None), "")
        self.assertEqual(format_value("lbfgs"), "lbfgs")

    def test_row_length_checked(self):
        with self.assertRaises(ValueError):
            render_csv(["a", "b"], [(1,)])

    def test_atomic_write_leaves_no_temp_files(self):
        target = Path(self.test_dir) / "sub" / "out.txt"
        atomic_write_text(target, "first")
        atomic_write_text(target, "second")
        self.assertEqual(target.read_text(encoding='utf-8'), "second")
        self.assertEqual([p.name for p in target.parent.iterdir()], ["out.txt"])

    def test_json_is_sorted(self):
        target = Path(self.test_dir) / "summary.json"
        write_json(target, {"b": 1, "a": [1.5, None]})
        text = target.read_text(encoding='utf-8')
        self.assertLess(text.index('"a"'), text.index('"b"'))
        self.assertEqual(json.loads(text), {"a": [1.5, None], "b": 1})

    def test_read_with_bom(self):
        self.file_path.write_bytes(b"\xef\xbb\xbfTstar,Zstar\n0.5,1.2\n")
        self.assertTrue(read_file_content(self.file_path).startswith("Tstar"))
        self.assertEqual(read_experiment_csv(self.file_path), [(0.5, 1.2)])

    def test_experiment_rows_sorted(self):
        self.file_path.write_text("Tstar,Zstar\n1.5,2.0\n0.5,1.1\n", encoding='utf-8')
        self.assertEqual(read_experiment_csv(self.file_path), [(0.5, 1.1), (1.5, 2.0)])

    def test_experiment_bad_header(self):
        self.file_path.write_text("t,z\n0.5,1.1\n", encoding='utf-8')
        with self.assertRaises(ValueError) as ctx:
            read_experiment_csv(self.file_path)
        self.assertIn("Tstar,Zstar", str(ctx.exception))

    def test_experiment_bad_value(self):
        self.file_path.write_text("Tstar,Zstar\n0.5,abc\n", encoding='utf-8')
        with self.assertRaises(ValueError) as ctx:
            read_experiment_csv(self.file_path)
        self.assertIn(":2:", str(ctx.exception))


if __name__ == '__main__':
    unittest.main()
