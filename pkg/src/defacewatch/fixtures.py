"""Synthetic fixture pages for tests, demos, and the acceptance run.

Includes the two classic hiding techniques seen in the wild (an inline
display:none block and an absolutely positioned block pushed far off
screen), a substring-noise page whose only hits come from "bet" inside
ordinary English words, a keyword-spam page with a known occurrence
count, and per-visit body sequences that realize each lifecycle flag.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

LISTING_PAGE_URL = "http://fixture.ac.id/"
THIRD_PARTY_HIDDEN = "https://slot-promo.example/"
THIRD_PARTY_OFFSCREEN = "https://gacor-portal.example/"


def hidden_fragment(href: str = THIRD_PARTY_HIDDEN) -> str:
    return (
        '<div style="display: none;">\n'
        f'  <a href="{href}">Hidden</a>\n'
        "  slot gacor terpercaya\n"
        "</div>"
    )


def offscreen_fragment(href: str = THIRD_PARTY_OFFSCREEN) -> str:
    return (
        '<div style="position: absolute; left: -9999rem;">\n'
        f'  <a href="{href}">Out of screen</a>\n'
        "  slot maxwin zeus\n"
        "</div>"
    )


def listing_style_page() -> str:
    """A page hiding its injected gambling content both ways."""
    return f"""<!DOCTYPE html>
<html>
<head><title>Fakultas Teknik</title></head>
<body>
<nav><a href="/profil">Profil</a></nav>
<h1>Selamat datang</h1>
<p>Berita kampus dan pengumuman akademik.</p>
{hidden_fragment()}
{offscreen_fragment()}
</body>
</html>
"""


def bet_substring_page() -> str:
    """Substring noise only: "bet" appears inside ordinary words."""
    return """<!DOCTYPE html>
<html>
<head><title>Research blog</title></head>
<body>
<p>The difference between beta tests and production rollouts is
stability. Alphabetical ordering helps, but better tooling wins.</p>
</body>
</html>
"""


def keyword_spam_page(keyword: str = "slot", count: int = 715) -> str:
    """A page repeating one keyword an exact number of times."""
    words = " ".join([keyword] * count)
    return (
        "<!DOCTYPE html>\n<html>\n<head><title>gacor zone</title></head>\n"
        f"<body>\n<p>{words}</p>\n<p>daftar gacor hari ini</p>\n</body>\n</html>\n"
    )


def clean_page(title: str = "Portal Berita") -> str:
    return (
        "<!DOCTYPE html>\n<html>\n"
        f"<head><title>{title}</title></head>\n"
        "<body>\n<p>Pengumuman layanan publik dan agenda kegiatan.</p>\n</body>\n</html>\n"
    )


def counted_page(counts: dict[str, int], title: str = "Laman") -> str:
    """A page carrying exact keyword counts, for scripted series."""
    paragraphs = [
        f"<p>{' '.join([kw] * n)}</p>" for kw, n in counts.items() if n > 0
    ]
    body = "\n".join(paragraphs) or "<p>Konten layanan masyarakat.</p>"
    return (
        "<!DOCTYPE html>\n<html>\n"
        f"<head><title>{title}</title></head>\n"
        f"<body>\n{body}\n</body>\n</html>\n"
    )


def flag_series_bodies() -> dict[str, list[str]]:
    """Per-visit body sequences realizing each lifecycle flag.

    Keyed by URL path. Three visits each:
      repeat       5, 0, 3 occurrences
      fixed        5, 3, 0
      fluctuating  4, 2, 9
      constant     7, 7, 7
      notfound     substring noise only, every visit
    """
    def gambling(n_slot: int, n_gacor: int) -> str:
        return counted_page({"slot": n_slot, "gacor": n_gacor}, title="Laman")

    return {
        "/repeat": [gambling(3, 2), counted_page({}), gambling(2, 1)],
        "/fixed": [gambling(3, 2), gambling(2, 1), counted_page({})],
        "/fluctuating": [gambling(2, 2), gambling(1, 1), gambling(5, 4)],
        "/constant": [gambling(4, 3)] * 3,
        "/notfound": [bet_substring_page()] * 3,
    }


def strip_hiding_styles(html: str) -> str:
    """Remove inline style attributes so hidden content becomes visible."""
    return re.sub(r"\sstyle\s*=\s*(\"[^\"]*\"|'[^']*')", "", html)


STATIC_FIXTURES = {
    "listing.html": listing_style_page,
    "bet_noise.html": bet_substring_page,
    "slot_spam.html": keyword_spam_page,
    "clean.html": clean_page,
}


def write_fixtures(out_dir: str | Path) -> list[Path]:
    """Write the static fixture pages plus a sample seed file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, builder in STATIC_FIXTURES.items():
        path = out / name
        path.write_text(builder(), encoding="utf-8")
        written.append(path)

    seeds = [
        {
            "url": "http://fixture.ac.id/",
            "discovered_at": "2025-05-27T00:00:00.000Z",
            "source_label": "fixtures",
            "matched_keyword": "slot",
        },
        {
            "url": "http://fixture.go.id/berita",
            "discovered_at": "2025-05-27T00:05:00.000Z",
            "source_label": "fixtures",
            "matched_keyword": "gacor",
        },
    ]
    seed_path = out / "seeds.jsonl"
    seed_path.write_text(
        "".join(json.dumps(row) + "\n" for row in seeds), encoding="utf-8"
    )
    written.append(seed_path)
    return written
