"""Environment configuration, logging setup and the error records carried in ledgers."""

import logging
import os
import pickle
import unittest
from unittest import mock

from parcad.config import (
    DEFAULT_CELL_CAP,
    configure_logging,
    default_cell_cap,
    default_clause_timeout,
    default_log_level,
    env_int,
)
from parcad.errors import (
    EXIT_INPUT,
    EXIT_RESOURCE,
    BackendError,
    ClauseExplosion,
    ConfigError,
    FormulaSyntaxError,
    ResourceLimit,
    error_record,
)


class EnvIntTest(unittest.TestCase):
    def test_unset_and_blank_use_the_default(self) -> None:
        with mock.patch.dict(os.environ, {"PARCAD_TEST_VALUE": "  "}):
            self.assertEqual(env_int("PARCAD_TEST_VALUE", 7), 7)
        self.assertEqual(env_int("PARCAD_TEST_UNSET_VALUE", 3), 3)

    def test_reads_integers(self) -> None:
        with mock.patch.dict(os.environ, {"PARCAD_TEST_VALUE": "12"}):
            self.assertEqual(env_int("PARCAD_TEST_VALUE", 7), 12)

    def test_rejects_junk_and_negatives(self) -> None:
        for raw in ("twelve", "-1", "0", "1.5"):
            with self.subTest(raw=raw), mock.patch.dict(os.environ, {"PARCAD_TEST_VALUE": raw}):
                with self.assertRaises(ConfigError):
                    env_int("PARCAD_TEST_VALUE", 7)

    def test_zero_when_allowed(self) -> None:
        with mock.patch.dict(os.environ, {"PARCAD_TEST_VALUE": "0"}):
            self.assertEqual(env_int("PARCAD_TEST_VALUE", 7, allow_zero=True), 0)


class DefaultsTest(unittest.TestCase):
    def test_cell_cap(self) -> None:
        with mock.patch.dict(os.environ, {"PARCAD_CELL_CAP": ""}):
            self.assertEqual(default_cell_cap(), DEFAULT_CELL_CAP)
        with mock.patch.dict(os.environ, {"PARCAD_CELL_CAP": "500"}):
            self.assertEqual(default_cell_cap(), 500)

    def test_zero_timeout_disables(self) -> None:
        with mock.patch.dict(os.environ, {"PARCAD_CLAUSE_TIMEOUT": "0"}):
            self.assertIsNone(default_clause_timeout())
        with mock.patch.dict(os.environ, {"PARCAD_CLAUSE_TIMEOUT": "30"}):
            self.assertEqual(default_clause_timeout(), 30.0)

    def test_log_level(self) -> None:
        with mock.patch.dict(os.environ, {"PARCAD_LOG_LEVEL": "debug"}):
            self.assertEqual(default_log_level(), "DEBUG")
        with mock.patch.dict(os.environ, {"PARCAD_LOG_LEVEL": "chatty"}):
            with self.assertRaises(ConfigError):
                default_log_level()


class ConfigureLoggingTest(unittest.TestCase):
    def test_single_handler(self) -> None:
        configure_logging("INFO")
        logger = configure_logging("DEBUG")

        marked = [handler for handler in logger.handlers if getattr(handler, "_parcad", False)]
        self.assertEqual(len(marked), 1)
        self.assertEqual(logger.level, logging.DEBUG)
        self.assertFalse(logger.propagate)


class ErrorRecordTest(unittest.TestCase):
    def test_record_names_the_error(self) -> None:
        record = error_record(ResourceLimit("cells", 10))

        self.assertEqual(record, {"kind": "ResourceLimit", "message": "cells exceeded the cap of 10"})

    def test_exit_codes(self) -> None:
        self.assertEqual(FormulaSyntaxError(3, "']'", "(E x)[x").exit_code, EXIT_INPUT)
        self.assertEqual(ClauseExplosion(10, 27).exit_code, EXIT_RESOURCE)
        self.assertEqual(BackendError(4, "boom").exit_code, EXIT_RESOURCE)

    def test_backend_error_keeps_the_tail(self) -> None:
        error = BackendError(1, "one\ntwo\nthree\nfour\n")

        self.assertEqual(error.returncode, 1)
        self.assertEqual(str(error), "external backend exited with 1: two | three | four")

    def test_errors_survive_pickling(self) -> None:
        for error in (ClauseExplosion(10, 27), ResourceLimit("cells", 5), BackendError(2, "x")):
            with self.subTest(error=type(error).__name__):
                copy = pickle.loads(pickle.dumps(error))
                self.assertEqual(str(copy), str(error))


if __name__ == "__main__":
    unittest.main()
