"""Registrable-domain (eTLD+1) derivation from a public suffix database.

Parses the standard public suffix list file format (comment lines start
with ``//``, rules may carry ``*`` wildcards and ``!`` exceptions) and
applies the usual matching algorithm: exceptions beat wildcards, the
longest matching rule wins, and an unlisted TLD falls back to the
implicit ``*`` rule, i.e. the last two labels.
"""

from __future__ import annotations

import ipaddress
import logging
from importlib import resources
from pathlib import Path

logger = logging.getLogger(__name__)

BUNDLED_PSL = "public_suffix_list.dat"


def is_ip_literal(host: str) -> bool:
    candidate = host.strip("[]")
    try:
        ipaddress.ip_address(candidate)
        return True
    except ValueError:
        return False


class SuffixDatabase:
    """In-memory public suffix rules with eTLD+1 lookup."""

    def __init__(self, rules: set[str], exceptions: set[str]):
        self.rules = rules
        self.exceptions = exceptions

    @classmethod
    def from_text(cls, text: str) -> "SuffixDatabase":
        rules: set[str] = set()
        exceptions: set[str] = set()
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("//"):
                continue
            # ignore anything after whitespace, per the file format
            line = line.split()[0].lower()
            if line.startswith("!"):
                exceptions.add(line[1:])
            else:
                rules.add(line)
        return cls(rules, exceptions)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "SuffixDatabase":
        """Load from an explicit path, or the snapshot bundled with the package."""
        if path is not None:
            text = Path(path).read_text(encoding="utf-8")
        else:
            text = (
                resources.files("defacewatch")
                .joinpath("data")
                .joinpath(BUNDLED_PSL)
                .read_text(encoding="utf-8")
            )
        return cls.from_text(text)

    def _matches(self, rule: str, labels: list[str]) -> bool:
        rule_labels = rule.split(".")
        if len(rule_labels) > len(labels):
            return False
        for rule_label, label in zip(reversed(rule_labels), reversed(labels)):
            if rule_label != "*" and rule_label != label:
                return False
        return True

    def public_suffix(self, host: str) -> str:
        """Longest matching suffix for a hostname (the host's TLD group)."""
        host = host.lower().rstrip(".")
        if is_ip_literal(host):
            return host
        labels = host.split(".")

        for rule in self.exceptions:
            if self._matches(rule, labels):
                # exception rule: the suffix is the rule minus its first label
                return ".".join(rule.split(".")[1:])

        best = ""
        best_len = 0
        for rule in self.rules:
            if self._matches(rule, labels):
                n = len(rule.split("."))
                if n > best_len:
                    best_len = n
                    best = ".".join(labels[-n:])
        if not best:
            # implicit "*" rule: unlisted TLDs are themselves suffixes
            logger.debug("no suffix rule for %s, using last label", host)
            best = labels[-1]
            best_len = 1
        return best

    def registrable_domain(self, host: str) -> str:
        """Public suffix plus one label. IP literals come back unchanged."""
        host = host.lower().rstrip(".")
        if is_ip_literal(host):
            logger.debug("registrable_domain on IP literal %s", host)
            return host
        suffix = self.public_suffix(host)
        labels = host.split(".")
        suffix_len = len(suffix.split("."))
        if len(labels) <= suffix_len:
            # the host itself is a public suffix; nothing above it to return
            logger.debug("host %s is itself a public suffix", host)
            return host
        return ".".join(labels[-(suffix_len + 1):])
