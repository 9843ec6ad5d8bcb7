// Surface gallery: representatives on top (cluster blocks in server order),
// members of the active cluster below.

import { ViewState } from "./state.js";
import { clusterColor } from "./colors.js";

export class Gallery {
  constructor(
    private reps: HTMLElement,
    private members: HTMLElement,
    private state: ViewState,
  ) {
    state.subscribe(() => this.render());
  }

  render(): void {
    this.reps.textContent = "";
    this.members.textContent = "";
    this.state.galleryBlocks.forEach((block, index) => {
      const tile = document.createElement("button");
      tile.className = "tile rep" + (index === this.state.activeCluster ? " active" : "");
      tile.dataset.label = String(block.label);
      tile.style.borderColor = clusterColor(block.label);
      tile.innerHTML = `<span class="tile-id">${short(block.representative)}</span>` +
        `<span class="tile-size">${block.size} surfaces</span>`;
      tile.addEventListener("click", () => this.state.selectCluster(block.label));
      this.reps.appendChild(tile);
    });
    for (const member of this.state.activeMembers) {
      const tile = document.createElement("button");
      const selected = this.state.surface(member) !== undefined;
      tile.className = "tile member" + (selected ? " selected" : "");
      tile.dataset.surface = member;
      tile.textContent = short(member);
      tile.addEventListener("click", () => {
        if (this.state.surface(member)) {
          this.state.removeSurface(member);
        } else {
          void this.state.addSurface(member);
        }
      });
      this.members.appendChild(tile);
    }
  }
}

function short(qualifiedId: string): string {
  const i = qualifiedId.indexOf(":");
  return i >= 0 ? qualifiedId.slice(i + 1) : qualifiedId;
}
