"""Small lenient DOM over the stdlib HTML parser.

Defaced pages are routinely broken markup, so the tree builder never
raises on bad nesting: an unmatched close tag is dropped, an unclosed
element is closed implicitly at end of input. The tree keeps parent
links, which the visibility classifier and co-location walk both need.
Inline ``style`` attributes are parsed here too; stylesheet cascade is
out of scope for this layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Iterator, Optional, Union

VOID_ELEMENTS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
}

# containers whose text is never rendered
NON_TEXT_CONTAINERS = {"script", "style", "template", "noscript"}


@dataclass
class Text:
    content: str
    parent: Optional["Element"] = None


@dataclass
class Element:
    tag: str
    attrs: dict[str, str] = field(default_factory=dict)
    parent: Optional["Element"] = None
    children: list[Union["Element", Text]] = field(default_factory=list)

    def attr(self, name: str) -> str | None:
        return self.attrs.get(name)

    @property
    def style(self) -> dict[str, str]:
        return parse_inline_style(self.attrs.get("style", ""))

    def ancestors(self) -> Iterator["Element"]:
        node = self.parent
        while node is not None:
            yield node
            node = node.parent

    def iter_elements(self, tag: str | None = None) -> Iterator["Element"]:
        """Depth-first walk of this subtree, self included."""
        stack: list[Element] = [self]
        while stack:
            node = stack.pop()
            if tag is None or node.tag == tag:
                yield node
            stack.extend(
                child for child in reversed(node.children) if isinstance(child, Element)
            )

    def iter_text(self, skip_hidden_containers: bool = True) -> Iterator[Text]:
        """Text nodes in document order, skipping script-like containers."""
        for child in self.children:
            if isinstance(child, Text):
                yield child
            elif skip_hidden_containers and child.tag in NON_TEXT_CONTAINERS:
                continue
            else:
                yield from child.iter_text(skip_hidden_containers)

    def text(self, separator: str = " ") -> str:
        return separator.join(t.content for t in self.iter_text())


def parse_inline_style(style_attr: str) -> dict[str, str]:
    """Parse a style attribute into a property map, one declaration at a time.

    A declaration that does not split into ``name: value`` is skipped on
    its own; the rest of the attribute still parses. Property names are
    lowercased; an ``!important`` suffix is dropped from the value.
    """
    result: dict[str, str] = {}
    if not style_attr:
        return result
    for declaration in style_attr.split(";"):
        if ":" not in declaration:
            continue
        name, _, value = declaration.partition(":")
        name = name.strip().lower()
        value = value.strip()
        if value.lower().endswith("!important"):
            value = value[: -len("!important")].rstrip()
        if name and value:
            result[name] = value
    return result


def effective_style_value(element: Element, prop: str) -> str | None:
    """Nearest-wins lookup: the element's own declaration, else the closest ancestor's."""
    own = element.style.get(prop)
    if own is not None:
        return own
    for ancestor in element.ancestors():
        value = ancestor.style.get(prop)
        if value is not None:
            return value
    return None


class _TreeBuilder(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.root = Element(tag="#document")
        self.stack: list[Element] = [self.root]

    def _open(self, tag: str, attrs: list[tuple[str, str | None]]) -> Element:
        attr_map: dict[str, str] = {}
        for name, value in attrs:
            # first declaration wins when an attribute repeats
            attr_map.setdefault(name.lower(), value if value is not None else "")
        parent = self.stack[-1]
        element = Element(tag=tag.lower(), attrs=attr_map, parent=parent)
        parent.children.append(element)
        return element

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        element = self._open(tag, attrs)
        if tag.lower() not in VOID_ELEMENTS:
            self.stack.append(element)

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        self._open(tag, attrs)

    def handle_endtag(self, tag: str) -> None:
        tag = tag.lower()
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return
        # unmatched close tag: ignore

    def handle_data(self, data: str) -> None:
        if not data:
            return
        parent = self.stack[-1]
        parent.children.append(Text(content=data, parent=parent))


def parse_html(html: str) -> Element:
    """Build a DOM from possibly broken markup. Never raises on bad nesting."""
    builder = _TreeBuilder()
    builder.feed(html)
    builder.close()
    return builder.root


def find_first(root: Element, tag: str) -> Element | None:
    for element in root.iter_elements(tag):
        return element
    return None


def page_title(root: Element) -> str:
    title = find_first(root, "title")
    if title is None:
        return ""
    return " ".join(
        t.content for t in title.iter_text(skip_hidden_containers=False)
    ).strip()


def base_href(root: Element) -> str | None:
    base = find_first(root, "base")
    if base is None:
        return None
    return base.attr("href") or None


def find_meta_refresh(html: str) -> tuple[float, str] | None:
    """Extract ``(delay_seconds, target)`` from a meta refresh tag, if any.

    Handles the common content grammars: ``5; url=...``, ``0;URL='...'``
    and a bare delay (which is ignored, there being nowhere to go).
    """
    root = parse_html(html)
    for meta in root.iter_elements("meta"):
        if (meta.attr("http-equiv") or "").strip().lower() != "refresh":
            continue
        content = meta.attr("content") or ""
        delay_part, sep, rest = content.partition(";")
        try:
            delay = float(delay_part.strip() or "0")
        except ValueError:
            continue
        if not sep:
            continue
        rest = rest.strip()
        if rest.lower().startswith("url"):
            _, _, target = rest.partition("=")
            target = target.strip().strip("'\"").strip()
            if target:
                return delay, target
    return None
