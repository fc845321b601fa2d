"""Wikipedia plain-text retrieval with an on-disk cache, and synthetic three-article documents.

Articles come from the MediaWiki action API::

    GET {base}?action=query&prop=extracts&explaintext=1&redirects=1
              &format=json&formatversion=2&titles=<title>

with ``base`` defaulting to ``https://{lang}.wikipedia.org/w/api.php``. The
extract text is cached as a raw UTF-8 file named by the SHA-256 of
``"<lang>:<title>"``, so later calls can run fully offline.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import os
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import requests

from textdedicom.errors import InputError, NetworkError, NotFoundError

log = logging.getLogger(__name__)

DEFAULT_API = "https://{lang}.wikipedia.org/w/api.php"
CACHE_ENV = "TEXTDEDICOM_CACHE_DIR"
API_ENV = "TEXTDEDICOM_WIKI_API"
SELECTION_TYPES = ("different", "mixed", "similar")
USER_AGENT = "textdedicom/0.1 (research reproduction; article text fetcher)"


@dataclass(frozen=True)
class ArticleSpec:
    title: str
    language: str = "en"

    def __post_init__(self):
        if not self.title or not self.title.strip():
            raise InputError("article title must be non-empty")


@dataclass(frozen=True)
class SyntheticDocument:
    id: int
    selection_type: str
    article_titles: tuple
    concatenated_text: str

    def __post_init__(self):
        if len(self.article_titles) != 3:
            raise InputError(f"document {self.id}: expected 3 articles, got {len(self.article_titles)}")
        if self.selection_type not in SELECTION_TYPES:
            raise InputError(f"document {self.id}: unknown selection type {self.selection_type!r}")


def default_cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "textdedicom"))


def cache_path(spec: ArticleSpec, cache_dir) -> Path:
    key = hashlib.sha256(f"{spec.language}:{spec.title}".encode("utf-8")).hexdigest()
    return Path(cache_dir) / f"{key}.txt"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".txt")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(text.encode("utf-8"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _request_extract(spec: ArticleSpec, api_url: str, timeout: float) -> str:
    params = {
        "action": "query",
        "prop": "extracts",
        "explaintext": 1,
        "redirects": 1,
        "format": "json",
        "formatversion": 2,
        "titles": spec.title,
    }
    url = api_url.format(lang=spec.language)
    try:
        resp = requests.get(url, params=params, timeout=timeout, headers={"User-Agent": USER_AGENT})
        resp.raise_for_status()
        payload = resp.json()
    except (requests.RequestException, ValueError) as exc:
        raise NetworkError(f"fetching {spec.title!r} from {url} failed: {exc}") from exc

    pages = payload.get("query", {}).get("pages", [])
    if isinstance(pages, dict):  # formatversion=1 shape
        pages = list(pages.values())
    if not pages or pages[0].get("missing") is not None or "extract" not in pages[0]:
        raise NotFoundError(spec.title)
    return pages[0]["extract"]


def fetch_article(spec: ArticleSpec | str, cache_dir=None, offline: bool = False,
                  api_url: str | None = None, timeout: float = 30.0) -> str:
    """Return the plain-text extract of an article, using the cache when possible."""
    if isinstance(spec, str):
        spec = ArticleSpec(spec)
    cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    path = cache_path(spec, cache_dir)
    if path.exists():
        return path.read_bytes().decode("utf-8")
    if offline:
        raise NetworkError(f"article {spec.title!r} is not cached in {cache_dir} and network is disabled")
    api_url = api_url or os.environ.get(API_ENV, DEFAULT_API)
    text = _request_extract(spec, api_url, timeout)
    _atomic_write(path, text)
    log.info("cached %r (%d chars) at %s", spec.title, len(text), path)
    return text


def read_table(path=None) -> list:
    """Rows ``(id, type, t1, t2, t3)`` from a tab-separated table with a header line.

    Without a path, returns the bundled twelve-row article table.
    """
    if path is None:
        text = resources.files("textdedicom.data").joinpath("articles.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    rows = []
    for rec in csv.reader(io.StringIO(text), delimiter="\t"):
        if not rec or rec[0].startswith("#") or rec[0] == "id":
            continue
        if len(rec) != 5:
            raise InputError(f"table row {rec!r}: expected id, type and 3 titles")
        rows.append((int(rec[0]), rec[1].strip(), rec[2].strip(), rec[3].strip(), rec[4].strip()))
    return rows


def build_synthetic_docs(table, cache_dir=None, offline: bool = False,
                         api_url: str | None = None, language: str = "en") -> list:
    """Fetch the three articles of every row and join them with single newlines."""
    docs = []
    for doc_id, kind, *titles in table:
        if len(titles) != 3:
            raise InputError(f"row {doc_id}: expected 3 titles, got {len(titles)}")
        parts = []
        for title in titles:
            try:
                parts.append(fetch_article(ArticleSpec(title, language), cache_dir, offline, api_url))
            except NotFoundError as exc:
                raise NotFoundError(title, f"row {doc_id}: {exc}") from exc
            except NetworkError as exc:
                raise NetworkError(f"row {doc_id}: {exc}") from exc
        docs.append(SyntheticDocument(doc_id, kind, tuple(titles), "\n".join(parts)))
    return docs
