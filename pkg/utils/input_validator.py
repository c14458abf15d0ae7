"""
Input Validation Module
Provides validation functions for command-line inputs: sentences, file paths,
evidence assignments and numeric limits
"""

import os
import re
from typing import List, Optional, Tuple

MAX_SENTENCE_LENGTH = 10000
IDENTIFIER_PATTERN = re.compile(r'^[A-Za-z_][A-Za-z0-9_]*$')
ENTITY_PATTERN = re.compile(r'^[^\s(),=]+$')
EVIDENCE_PATTERN = re.compile(r'^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(([^()]*)\)\s*=\s*([^\s=]+)\s*$')


def validate_sentence(sentence: str) -> Tuple[bool, Optional[str]]:
    """
    Validate a sentence before tokenization.

    Args:
        sentence: Whitespace-separated tokens

    Returns:
        Tuple of (is_valid, error_message)
    """
    if sentence is None or not isinstance(sentence, str):
        return False, "Sentence is required and must be a string"

    if len(sentence) > MAX_SENTENCE_LENGTH:
        return False, "Sentence is too long"

    if not sentence.strip():
        return False, "Sentence is empty"

    if '\x00' in sentence:
        return False, "Sentence contains invalid characters"

    return True, None


def tokenize(sentence: str) -> List[str]:
    """Split on runs of whitespace; tokens are matched verbatim against the grammar"""
    return sentence.split()


def validate_file_path(path: str) -> Tuple[bool, Optional[str]]:
    """
    Validate that a path names a readable regular file.

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not path or not isinstance(path, str):
        return False, "File path is required"

    if not os.path.exists(path):
        return False, f"{path}: no such file"

    if not os.path.isfile(path):
        return False, f"{path}: not a regular file"

    if not os.access(path, os.R_OK):
        return False, f"{path}: permission denied"

    return True, None


def validate_identifier(name: str) -> Tuple[bool, Optional[str]]:
    """Random variable names: letters, digits and underscores, not starting with a digit"""
    if not name or not isinstance(name, str):
        return False, "Variable name is required"

    if not IDENTIFIER_PATTERN.match(name):
        return False, f"Invalid variable name: {name}"

    return True, None


def validate_entity(name: str) -> Tuple[bool, Optional[str]]:
    if not name or not isinstance(name, str):
        return False, "Entity identifier is required"

    if not ENTITY_PATTERN.match(name):
        return False, f"Invalid entity identifier: {name}"

    return True, None


def parse_evidence(text: str) -> Tuple[Optional[Tuple[str, Tuple[str, ...], str]], Optional[str]]:
    """
    Parse an evidence assignment of the form `variable(arg1, arg2)=STATE`.

    Returns:
        Tuple of ((variable, args, state), error_message)
    """
    if not text or not isinstance(text, str):
        return None, "Evidence is required"

    match = EVIDENCE_PATTERN.match(text)
    if not match:
        return None, f"Invalid evidence {text!r}: expected variable(arg, ...)=STATE"

    variable, raw_args, state = match.groups()
    args = tuple(a.strip() for a in raw_args.split(',') if a.strip())
    for arg in args:
        is_valid, error = validate_entity(arg)
        if not is_valid:
            return None, error

    return (variable, args, state), None


def validate_depth_limit(value) -> Tuple[bool, Optional[str]]:
    """Depth limits are integers >= 1"""
    try:
        number = int(value)
    except (TypeError, ValueError):
        return False, f"Depth limit must be an integer, got {value!r}"

    if number < 1:
        return False, "Depth limit must be at least 1"

    return True, None
