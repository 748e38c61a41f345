import pytest

from prosody_features.annot import (Annotation, AnnotationError, Item, Tier,
                                    annotations_match, expand_events_to_global_segments,
                                    parse_textgrid, parse_xml_annotation, write_annotation)

LONG = '''File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 2
tiers? <exists>
size = 2
item []:
    item [1]:
        class = "IntervalTier"
        name = "words"
        xmin = 0
        xmax = 2
        intervals: size = 2
        intervals [1]:
            xmin = 0
            xmax = 1.2
            text = "hello"
        intervals [2]:
            xmin = 1.2
            xmax = 2
            text = "<P>"
    item [2]:
        class = "TextTier"
        name = "tones"
        xmin = 0
        xmax = 2
        points: size = 3
        points [1]:
            number = 0.5
            mark = "H*"
        points [2]:
            number = 1.0
            mark = "L"
        points [3]:
            number = 1.5
            mark = "H"
'''

SHORT = '''File type = "ooTextFile"
Object class = "TextGrid"

0
2
<exists>
2
"IntervalTier"
"words"
0
2
2
0
1.2
"hello"
1.2
2
"<P>"
"TextTier"
"tones"
0
2
3
0.5
"H*"
1.0
"L"
1.5
"H"
'''

XML = '''<?xml version="1.0" encoding="UTF-8"?>
<annotation>
  <tiers>
    <tier>
      <name>mySegmentTier</name>
      <type>segment</type>
      <items>
        <item><label>x</label><t_start>0.3</t_start><t_end>0.9</t_end></item>
      </items>
    </tier>
    <tier>
      <name>myEventTier</name>
      <type>event</type>
      <items>
        <item><label>y</label><t>0.7</t></item>
      </items>
    </tier>
  </tiers>
</annotation>
'''


def test_long_textgrid():
    a = parse_textgrid(LONG)
    assert a.tiers["words"].kind == "segment"
    assert [it.label for it in a.tiers["words"].items] == ["hello", "<P>"]
    tones = a.tiers["tones"]
    assert tones.is_event and len(tones.items) == 3
    assert all(it.t_start == it.t_end for it in tones.items)


def test_short_equals_long():
    assert annotations_match(parse_textgrid(LONG), parse_textgrid(SHORT))


def test_xml_example():
    a = parse_xml_annotation(XML)
    seg, ev = a.tiers["mySegmentTier"], a.tiers["myEventTier"]
    assert (seg.items[0].t_start, seg.items[0].t_end, seg.items[0].label) == (0.3, 0.9, "x")
    assert ev.is_event and ev.items[0].t_start == 0.7 and ev.items[0].label == "y"


def test_xml_empty_tiers():
    a = parse_xml_annotation("<annotation><tiers></tiers></annotation>")
    assert a.tiers == {}


def test_xml_event_without_time():
    bad = XML.replace("<t>0.7</t>", "")
    with pytest.raises(AnnotationError):
        parse_xml_annotation(bad)


@pytest.mark.parametrize("fmt", ["xml", "textgrid-long", "textgrid-short"])
def test_roundtrip(fmt):
    src = XML if fmt == "xml" else LONG
    parse = parse_xml_annotation if fmt == "xml" else parse_textgrid
    a = parse(src)
    assert annotations_match(a, parse(write_annotation(a, fmt)))


def test_xml_to_textgrid_fills_gaps_with_pauses():
    a = parse_xml_annotation(XML)
    b = parse_textgrid(write_annotation(a, "textgrid-long"))
    speech = [(i.label, i.t_start, i.t_end) for i in b.tiers["mySegmentTier"].speech_items()]
    assert speech == [("x", 0.3, 0.9)]
    assert b.tiers["myEventTier"].items[0].t_start == 0.7


def test_pause_label_preserved():
    a = parse_textgrid(LONG)
    b = parse_textgrid(write_annotation(a, "textgrid-long"))
    assert b.tiers["words"].items[1].label == "<P>"


def test_item_validation():
    with pytest.raises(AnnotationError):
        Item("x", 2.0, 1.0)
    with pytest.raises(AnnotationError):
        Item("x", -0.1, 1.0)


def _ev(*ts):
    return Tier("b", "event", [Item("x", t, t) for t in ts])


def test_events_to_segments():
    seg = expand_events_to_global_segments(_ev(1.0, 2.0, 3.0), duration=3.0)
    assert [(i.t_start, i.t_end) for i in seg.items] == [(0, 1), (1, 2), (2, 3)]


def test_single_event_at_end():
    seg = expand_events_to_global_segments(_ev(2.5), duration=2.5)
    assert [(i.t_start, i.t_end) for i in seg.items] == [(0, 2.5)]


def test_events_respect_chunks():
    chunks = Tier("c", "segment", [Item("x", 0, 2.0), Item("x", 2.0, 3.0)])
    seg = expand_events_to_global_segments(_ev(1.0, 2.5), chunks, duration=3.0)
    edges = {round(e, 9) for i in seg.items for e in (i.t_start, i.t_end)}
    assert 2.0 in edges
    assert all(not (i.t_start < 2.0 < i.t_end) for i in seg.items)


def test_annotation_add_replaces():
    a = Annotation()
    a.add(Tier("t", "segment", [Item("a", 0, 1)]))
    a.add(Tier("t", "segment", [Item("b", 0, 2)]))
    assert a.tiers["t"].items[0].label == "b" and a.duration == 2
