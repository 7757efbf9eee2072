describe('Accordion with texts on detail page', () => {
  const productDetailPageUrl = '/de-DE/shop/ls/dp/physical-goods/900653';
  beforeEach(() => {
    cy.setTestCookies();
    cy.login(Cypress.env('users').DE);
    cy.visit(productDetailPageUrl);
    cy.setTestDealer();
    cy.reload();
    cy.wait(2000);
  });

  it('Display first section unfolded when customer opens the page', () => {
    // Check if the first section of the accordion is displayed unfolded
    cy.get('[data-testid="accordion-item-0"]').within(() => {
      cy.get('h2').should('have.text', 'Produktdetails');
      cy.get('.accordion-item-children').should('be.visible');
    });
  });

  it('Unfold and collapse sections via arrow', () => {
    // Click on the second section to unfold it
    cy.get('[data-testid="accordion-item-1"] h2').click();
    cy.get('[data-testid="accordion-item-1"] .accordion-item-children')
        .should('be.visible');
    // Click again to collapse it
    cy.get('[data-testid="accordion-item-1"] h2').click();
    cy.get('[data-testid="accordion-item-1"] .accordion-item-children')
        .should('not.be.visible');
  });
});
