import { describe, expect, it } from "vitest";

import { parseServerMessage, setPositionJson } from "../src/protocol.js";

describe("parseServerMessage", () => {
  it("parses a beacon with values untouched", () => {
    const msg = parseServerMessage(
      '{"type":"beacon","nodeId":7,"zone":32,"hemisphere":"N","easting":691147.0774,"northing":5336166.6592,"timestampMs":1500}',
    );
    expect(msg).toEqual({
      type: "beacon",
      nodeId: 7,
      zone: 32,
      hemisphere: "N",
      easting: 691147.0774,
      northing: 5336166.6592,
      timestampMs: 1500,
    });
  });

  it("parses a map and keeps every cell value exactly", () => {
    const msg = parseServerMessage(
      '{"type":"map","nodeId":3,"cellSizeM":3.0,"zone":32,"hemisphere":"N",' +
        '"cells":[{"cellX":230339,"cellY":1778729,"count":2.640625,"ageMs":1995}]}',
    );
    expect(msg).not.toBeNull();
    if (msg?.type !== "map") throw new Error("wrong type");
    expect(msg.cells).toHaveLength(1);
    expect(msg.cells[0]).toEqual({ cellX: 230339, cellY: 1778729, count: 2.640625, ageMs: 1995 });
  });

  it("parses nodeLocation and lag", () => {
    expect(
      parseServerMessage('{"type":"nodeLocation","nodeId":0,"lat":48.15,"lon":11.57,"simTimeUs":1500000}'),
    ).toEqual({ type: "nodeLocation", nodeId: 0, lat: 48.15, lon: 11.57, simTimeUs: 1500000 });
    expect(parseServerMessage('{"type":"lag","tRealS":1.25,"tSimS":1.2,"offsetS":0.05}')).toEqual({
      type: "lag",
      tRealS: 1.25,
      tSimS: 1.2,
      offsetS: 0.05,
    });
  });

  it.each([
    ["not json", "{"],
    ["array", "[1,2]"],
    ["number", "42"],
    ["null", "null"],
    ["unknown type", '{"type":"teleport","lat":1,"lon":2}'],
    ["missing field", '{"type":"lag","tRealS":1.25,"tSimS":1.2}'],
    ["string where number", '{"type":"nodeLocation","nodeId":0,"lat":"48.15","lon":11.57,"simTimeUs":1}'],
    ["boolean where number", '{"type":"beacon","nodeId":true,"zone":32,"hemisphere":"N","easting":1,"northing":2,"timestampMs":3}'],
    ["bad hemisphere", '{"type":"beacon","nodeId":1,"zone":32,"hemisphere":"X","easting":1,"northing":2,"timestampMs":3}'],
    ["cells not a list", '{"type":"map","nodeId":1,"cellSizeM":3,"zone":32,"hemisphere":"N","cells":7}'],
    ["cell missing a field", '{"type":"map","nodeId":1,"cellSizeM":3,"zone":32,"hemisphere":"N","cells":[{"cellX":1,"cellY":2,"count":3}]}'],
    ["zero cell size", '{"type":"map","nodeId":1,"cellSizeM":0,"zone":32,"hemisphere":"N","cells":[]}'],
  ])("rejects %s", (_label, text) => {
    expect(parseServerMessage(text)).toBeNull();
  });

  it("accepts an empty cell list", () => {
    const msg = parseServerMessage('{"type":"map","nodeId":1,"cellSizeM":3,"zone":32,"hemisphere":"N","cells":[]}');
    expect(msg?.type).toBe("map");
  });
});

describe("setPositionJson", () => {
  it("emits the exact compact message the server expects", () => {
    expect(setPositionJson(48.15, 11.57)).toBe('{"type":"setPosition","lat":48.15,"lon":11.57}');
  });
});
