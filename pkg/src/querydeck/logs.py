"""Query log ingestion.

Accepted formats: newline- or semicolon-delimited SQL statements, or TSV
rows ``client_id <TAB> timestamp <TAB> sql``.  Comments are stripped and
multi-statement lines split on top-level semicolons before parsing;
unparseable entries are logged and skipped.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .parser import ParseError, parse
from .tree import AstNode, GrammarAnnotations

logger = logging.getLogger(__name__)


@dataclass
class LogEntry:
    client: str | None
    timestamp: str | None
    sql: str


def strip_comments(text: str) -> str:
    """Remove -- and /* */ comments without touching string literals."""
    out = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "'":
            j = i + 1
            while j < n:
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":
                        j += 2
                        continue
                    break
                j += 1
            out.append(text[i:j + 1])
            i = j + 1
        elif c == "-" and text[i:i + 2] == "--":
            while i < n and text[i] != "\n":
                i += 1
        elif c == "/" and text[i:i + 2] == "/*":
            end = text.find("*/", i + 2)
            i = n if end < 0 else end + 2
            out.append(" ")
        else:
            out.append(c)
            i += 1
    return "".join(out)


def split_statements(text: str) -> list[str]:
    """Split on top-level semicolons, else on non-empty lines."""
    text = strip_comments(text)
    if ";" in text:
        parts, buf, i, n = [], [], 0, len(text)
        while i < n:
            c = text[i]
            if c == "'":
                j = i + 1
                while j < n:
                    if text[j] == "'" and text[j:j + 2] != "''":
                        break
                    j += 2 if text[j:j + 2] == "''" else 1
                buf.append(text[i:j + 1])
                i = j + 1
            elif c == ";":
                parts.append("".join(buf))
                buf = []
                i += 1
            else:
                buf.append(c)
                i += 1
        parts.append("".join(buf))
    else:
        parts = text.splitlines()
    return [p.strip() for p in parts if p.strip()]


def read_entries(text: str) -> list[LogEntry]:
    """Parse raw log text into entries, auto-detecting the TSV form."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    tsv = bool(lines) and all(ln.count("\t") >= 2 for ln in lines)
    if tsv:
        entries = []
        for ln in lines:
            client, ts, sql = ln.split("\t", 2)
            for stmt in split_statements(sql):
                entries.append(LogEntry(client.strip() or None, ts.strip() or None, stmt))
        return entries
    return [LogEntry(None, None, stmt) for stmt in split_statements(text)]


def parse_entries(entries: list[LogEntry],
                  ann: GrammarAnnotations | None = None) -> list[AstNode]:
    """Parse log entries, dropping (and logging) unsupported statements."""
    queries = []
    skipped = 0
    for entry in entries:
        try:
            queries.append(parse(entry.sql, ann))
        except ParseError as exc:
            skipped += 1
            logger.warning("skipping unparseable query: %s | %s", exc, entry.sql[:80])
    if skipped:
        logger.info("skipped %d of %d log entries", skipped, len(entries))
    return queries


def load_log(path: str, ann: GrammarAnnotations | None = None,
             merge_clients: bool = False) -> dict[str | None, list[AstNode]]:
    """Read a log file and return parsed queries grouped by client.

    Single-client (or merged) logs come back under the ``None`` key.
    """
    with open(path, encoding="utf-8") as fh:
        entries = read_entries(fh.read())
    if merge_clients or all(e.client is None for e in entries):
        return {None: parse_entries(entries, ann)}
    groups: dict[str | None, list[LogEntry]] = {}
    for e in entries:
        groups.setdefault(e.client, []).append(e)
    return {client: parse_entries(es, ann) for client, es in sorted(
        groups.items(), key=lambda kv: str(kv[0]))}
