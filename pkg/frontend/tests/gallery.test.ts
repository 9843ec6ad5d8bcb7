// DOM-level behavior of the gallery against the fake service.

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Gallery } from "../src/gallery.js";
import { ViewState } from "../src/state.js";
import { FakeService } from "./fake_service.js";

let state: ViewState;
let reps: HTMLElement;
let members: HTMLElement;

beforeEach(async () => {
  document.body.innerHTML = '<div id="reps"></div><div id="members"></div>';
  reps = document.getElementById("reps")!;
  members = document.getElementById("members")!;
  const service = new FakeService();
  state = new ViewState(new ApiClient("http://fake", service.fetch));
  new Gallery(reps, members, state);
  await state.loadDataset("demo");
});

describe("gallery DOM", () => {
  it("renders representative tiles in server (descending size) order", () => {
    const tiles = [...reps.querySelectorAll(".tile")];
    expect(tiles.length).toBe(2);
    expect(tiles[0].textContent).toContain("4 surfaces");
    expect(tiles[1].textContent).toContain("2 surfaces");
  });

  it("clicking a representative repopulates the member row", () => {
    const tiles = reps.querySelectorAll<HTMLButtonElement>(".tile");
    tiles[1].click();
    const memberTiles = [...members.querySelectorAll<HTMLButtonElement>(".tile")];
    expect(memberTiles.length).toBe(2);
    expect(memberTiles[0].dataset.surface).toBe("demo:surf_4");
  });

  it("clicking a member adds the surface to the view and marks the tile", async () => {
    const memberTile = members.querySelector<HTMLButtonElement>(".tile")!;
    memberTile.click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(state.surfaces.map((s) => s.id)).toEqual(["demo:surf_0"]);
    expect(members.querySelector(".tile.selected")).not.toBeNull();
  });
});
