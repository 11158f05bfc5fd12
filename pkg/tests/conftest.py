"""Shared model documents used across the emg, miniver and pipeline tests."""

import copy

import pytest


def tty_callbacks_doc():
    """Scenario model of the tty callbacks example."""
    return {
        "tty/callbacks": {
            "labels": {
                "driver": {"declaration": "struct tty_driver *driver"},
                "retval": {"declaration": "int retval"},
                "ops": {
                    "declaration": "struct tty_operations *ops",
                    "value": "__VERIFIER_nondet_pointer()",
                },
            },
            "actions": {
                "callbacks": {"comment": "Begin functions calls.", "parameters": []},
                "alloc": {
                    "comment": "Allocate device.",
                    "statements": ["%driver% = tty_alloc_driver();"],
                },
                "reg": {
                    "comment": "Register callbacks.",
                    "statements": [
                        "tty_set_operations(%driver%, %ops%);",
                        "%retval% = tty_register_driver(%driver%);",
                    ],
                    "condition": ["%driver% != 0"],
                },
                "unreg": {
                    "comment": "Unregister callbacks.",
                    "statements": [
                        "tty_unregister_driver(%driver%);",
                        "put_tty_driver(%driver%);",
                    ],
                    "condition": ["%retval% == 0"],
                },
                "fail": {
                    "comment": "Failed to register callbacks.",
                    "statements": ["put_tty_driver(%driver%);"],
                    "condition": ["%retval% != 0"],
                },
                "skip": {
                    "comment": "Failed to allocate memory for the driver.",
                    "condition": ["%driver% == 0"],
                },
            },
            "process": "(!callbacks).<alloc>.(<reg>.(<unreg> | <fail>) | <skip>)",
        }
    }


def jump_loop_doc():
    """Transfer-relation example with a jump loop and an unmatched send."""
    return {
        "loop/events": {
            "labels": {},
            "actions": {
                "a": {"comment": "Wait for the start signal.", "parameters": []},
                "b": {"comment": "Step b.", "statements": ["step_b();"]},
                "c": {"comment": "Step c.", "statements": ["step_c();"]},
                "d": {"comment": "Repeat or finish.", "process": "<f>.{d} | [e]"},
                "f": {"comment": "Step f.", "statements": ["step_f();"]},
                "e": {"comment": "Send the finish signal.", "parameters": []},
            },
            "process": "(!a).<b>.(<c> | {d}).[e]",
        }
    }


@pytest.fixture
def tty_doc():
    return copy.deepcopy(tty_callbacks_doc())


@pytest.fixture
def loop_doc():
    return copy.deepcopy(jump_loop_doc())
