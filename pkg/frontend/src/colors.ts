// Categorical patch palette plus highlight/dim colors for the surface view.

export type Rgb = [number, number, number];

const PALETTE: Rgb[] = [
  [0.36, 0.57, 0.84], [0.92, 0.56, 0.22], [0.44, 0.73, 0.39], [0.80, 0.34, 0.34],
  [0.61, 0.47, 0.76], [0.55, 0.43, 0.34], [0.85, 0.58, 0.77], [0.55, 0.55, 0.55],
  [0.74, 0.74, 0.32], [0.33, 0.73, 0.76], [0.23, 0.41, 0.62], [0.70, 0.42, 0.12],
];

export const HIGHLIGHT: Rgb = [1.0, 0.84, 0.1];
export const QUERY: Rgb = [1.0, 0.3, 0.2];

export function patchColor(patchId: number): Rgb {
  return PALETTE[patchId % PALETTE.length];
}

export function clusterColor(label: number): string {
  const [r, g, b] = PALETTE[label % PALETTE.length];
  return `rgb(${Math.round(r * 255)}, ${Math.round(g * 255)}, ${Math.round(b * 255)})`;
}
